// Copyright 2026 The SDL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdl/error.h"
#include "sdl/random.h"
#include "sdl/stats.h"
#include "support.h"

using namespace sdl;
using namespace sdl::stats;
namespace ref = sdl::testing;

namespace {

double skewness(const Column& x) {
  const double n = static_cast<double>(x.size());
  double m = 0;
  for (double v : x) m += v / n;
  double m2 = 0, m3 = 0;
  for (double v : x) {
    m2 += (v - m) * (v - m) / n;
    m3 += (v - m) * (v - m) * (v - m) / n;
  }
  return m3 / std::pow(m2, 1.5);
}

struct Synthetic {
  FeatureTable table;
  std::vector<Column> covariates;
  Column y;
};

// y = 0.5 + beta . x + u_group + e, x standard normal.
Synthetic grouped_data(size_t groups, size_t rows_per_group, const std::vector<double>& beta,
                       double group_sd, double noise_sd, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> ids;
  std::vector<Column> cols(beta.size());
  Column y;
  for (size_t g = 0; g < groups; ++g) {
    const double u = rng.normal(0.0, group_sd);
    for (size_t r = 0; r < rows_per_group; ++r) {
      ids.push_back("g" + std::to_string(g));
      double v = 0.5 + u + rng.normal(0.0, noise_sd);
      for (size_t k = 0; k < beta.size(); ++k) {
        const double x = rng.normal();
        cols[k].push_back(x);
        v += beta[k] * x;
      }
      y.push_back(v);
    }
  }
  Synthetic s{FeatureTable(ids), cols, y};
  for (size_t k = 0; k < cols.size(); ++k) s.table.set("x" + std::to_string(k), cols[k]);
  s.table.set("y", y);
  return s;
}

std::vector<std::string> names(size_t k) {
  std::vector<std::string> out;
  for (size_t i = 0; i < k; ++i) out.push_back("x" + std::to_string(i));
  return out;
}

}  // namespace

// ---- transforms --------------------------------------------------------------------

TEST_CASE("standardize examples") {
  const Column z = standardize(Column{1, 2, 3});
  CHECK(z[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(std::fabs(z[1]) < 1e-15);
  CHECK(z[2] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(standardize(Column{5, 5, 5}), DegenerateError);

  Rng rng(1);
  Column x(500);
  for (double& v : x) v = rng.normal(3.0, 7.0);
  const Column once = standardize(x);
  CHECK(std::fabs(mean(once)) < 1e-12);
  CHECK(std::fabs(sample_sd(once) - 1.0) < 1e-12);
  const Column twice = standardize(once);
  for (size_t i = 0; i < x.size(); ++i) CHECK(std::fabs(twice[i] - once[i]) < 1e-12);
}

TEST_CASE("log_standardize examples") {
  const Column z = log_standardize(Column{0, M_E - 1, M_E * M_E - 1});
  CHECK(z[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::fabs(z[1]) < 1e-12);
  CHECK(z[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(log_standardize(Column{0, 0, 0}), DegenerateError);
  CHECK_THROWS_AS(log_standardize(Column{1, -1, 2}), PreconditionError);

  Rng rng(2);
  Column skewed(2000);
  for (double& v : skewed) v = std::exp(rng.normal(1.0, 1.0));
  CHECK(std::fabs(skewness(log_standardize(skewed))) < std::fabs(skewness(skewed)));
}

// ---- regression ---------------------------------------------------------------------

TEST_CASE("recovers a generated politeness coefficient") {
  const auto s = grouped_data(200, 50, {0.038, -0.047}, 0.1, 0.4, 5);
  const auto fit = fit_random_intercept(s.table, "y", names(2));
  const auto& pol = fit.at("x0");
  const auto& pos = fit.at("x1");
  CHECK(std::fabs(pol.estimate - 0.038) < 2 * pol.std_error);
  CHECK(std::fabs(pos.estimate + 0.047) < 2 * pos.std_error);
  CHECK(pol.estimate > 0);
  CHECK(pos.estimate < 0);
  CHECK(fit.random_intercept_variance > 0.0);
  CHECK(fit.converged);
  for (const auto& c : fit.coefficients) {
    CHECK(c.p_value >= 0.0);
    CHECK(c.p_value <= 1.0);
    CHECK(c.std_error > 0.0);
  }
}

TEST_CASE("zero group variance matches the closed-form OLS") {
  const auto s = grouped_data(200, 50, {0.038, -0.047}, 0.0, 0.4, 1);
  const auto ols = ref::ols_oracle(s.covariates, s.y);

  RandomInterceptOptions fixed;
  fixed.fix_group_variance_zero = true;
  const auto pinned = fit_random_intercept(s.table, "y", names(2), fixed);
  CHECK(pinned.random_intercept_variance == 0.0);
  for (size_t k = 0; k < ols.size(); ++k) {
    CHECK(std::fabs(pinned.coefficients[k].estimate - ols[k]) < 1e-6);
  }

  // The free fit lands near, not always on, the boundary.
  const auto fit = fit_random_intercept(s.table, "y", names(2));
  CHECK(fit.random_intercept_variance < 1e-3);
  for (size_t k = 0; k < ols.size(); ++k) {
    CHECK(std::fabs(fit.coefficients[k].estimate - ols[k]) < 0.1 * fit.coefficients[k].std_error);
  }
}

TEST_CASE("one row per group with the variance pinned is OLS") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t n = 10 + rng.below(190);
    const auto s = grouped_data(n, 1, {rng.normal(), rng.normal()}, 0.0, 1.0, rng.next());
    RandomInterceptOptions fixed;
    fixed.fix_group_variance_zero = true;
    const auto fit = fit_random_intercept(s.table, "y", names(2), fixed);
    const auto ols = ref::ols_oracle(s.covariates, s.y);
    for (size_t k = 0; k < ols.size(); ++k) {
      REQUIRE(std::fabs(fit.coefficients[k].estimate - ols[k]) < 1e-9);
    }
  }
}

TEST_CASE("exact fit when the dependent is a covariate") {
  auto s = grouped_data(30, 4, {0.2, 0.4}, 0.3, 1.0, 3);
  s.table.set("copy", s.table.column("x1"));
  const auto fit = fit_random_intercept(s.table, "copy", names(2));
  CHECK(fit.at("x1").estimate == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::fabs(fit.at("x0").estimate) < 1e-9);
  CHECK(std::fabs(fit.at("(intercept)").estimate) < 1e-9);
  CHECK(fit.residual_variance < 1e-12);
}

TEST_CASE("rank-deficient design names the collinear columns") {
  auto s = grouped_data(20, 5, {0.2, 0.4}, 0.3, 1.0, 4);
  Column twice = s.table.column("x0");
  for (double& v : twice) v *= 2;
  s.table.set("x0_twice", twice);
  try {
    fit_random_intercept(s.table, "y", {"x0", "x1", "x0_twice"});
    FAIL("expected SingularityError");
  } catch (const SingularityError& e) {
    CHECK(std::string(e.what()).find("x0_twice") != std::string::npos);
  }
}

TEST_CASE("coefficients ignore row order and group names") {
  const auto s = grouped_data(40, 6, {0.1, -0.3}, 0.4, 0.6, 10);
  const auto base = fit_random_intercept(s.table, "y", names(2));

  std::vector<size_t> order(s.y.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(1);
  rng.shuffle(std::span<size_t>(order));
  std::vector<std::string> groups;
  for (size_t i : order) groups.push_back("renamed-" + s.table.groups()[i] + "-x");
  FeatureTable shuffled(groups);
  for (const auto& name : s.table.names()) {
    Column c;
    for (size_t i : order) c.push_back(s.table.column(name)[i]);
    shuffled.set(name, c);
  }
  const auto other = fit_random_intercept(shuffled, "y", names(2));
  for (size_t k = 0; k < base.coefficients.size(); ++k) {
    CHECK(other.coefficients[k].estimate ==
          doctest::Approx(base.coefficients[k].estimate).epsilon(1e-8));
  }
  CHECK(other.random_intercept_variance ==
        doctest::Approx(base.random_intercept_variance).epsilon(1e-6));
}

TEST_CASE("regression preconditions") {
  auto s = grouped_data(1, 10, {0.1}, 0.0, 1.0, 1);
  CHECK_THROWS_AS(fit_random_intercept(s.table, "y", names(1)), PreconditionError);
}

TEST_CASE("regression table layout") {
  const auto s = grouped_data(50, 10, {0.3, 0.0}, 0.2, 0.5, 6);
  const std::vector<RegressionFit> fits = {fit_random_intercept(s.table, "y", names(2))};
  const std::vector<std::string> titles = {"Model 1"}, rows = {"x0", "x1"};
  const std::string table = format_regression_table(fits, titles, rows);
  CHECK(table.find("*:p<0.05, **:p<0.01, ***:p<0.001") != std::string::npos);
  CHECK(table.find("***") != std::string::npos);
  CHECK(significance_stars(0.04) == "*");
  CHECK(significance_stars(0.009) == "**");
  CHECK(significance_stars(0.0009) == "***");
  CHECK(significance_stars(0.05) == "");
  const auto js = regression_to_json(fits[0]);
  CHECK(js["coefficients"].size() == 3);
}

// ---- tests ---------------------------------------------------------------------------

TEST_CASE("paired t on a fixed 10-point data set") {
  const Column a = {5.1, 4.8, 6.0, 5.5, 5.9, 6.3, 4.7, 5.2, 5.8, 6.1};
  const Column b = {4.9, 4.9, 5.4, 5.0, 5.6, 5.7, 4.8, 4.6, 5.5, 5.6};
  double md = 0;
  for (size_t i = 0; i < a.size(); ++i) md += (a[i] - b[i]) / 10.0;
  double ss = 0;
  for (size_t i = 0; i < a.size(); ++i) ss += std::pow(a[i] - b[i] - md, 2);
  const double t = md / (std::sqrt(ss / 9.0) / std::sqrt(10.0));
  const auto r = paired_t_test(a, b);
  CHECK(r.statistic == doctest::Approx(t).epsilon(1e-12));
  CHECK(r.df == 9.0);
  CHECK(std::fabs(r.p_value - ref::t_two_sided_quadrature(t, 9.0)) < 1e-6);
  CHECK(paired_t_test(b, a).statistic == -r.statistic);
}

TEST_CASE("paired t limits and errors") {
  Rng rng(4);
  Column a(200), b(200);
  for (size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.normal();
    b[i] = a[i] + (i % 2 ? 1e-9 : -1e-9);
  }
  const auto null = paired_t_test(a, b);
  CHECK(std::fabs(null.statistic) < 1e-3);
  CHECK(null.p_value > 0.99);

  for (size_t i = 0; i < a.size(); ++i) b[i] = a[i] - 1.0 - 1e-9 * rng.normal();
  const auto big = paired_t_test(a, b);
  CHECK(big.statistic > 1e6);
  CHECK(big.p_value < 1e-12);

  CHECK_THROWS_AS(paired_t_test(Column{1, 2}, Column{1, 2, 3}), PreconditionError);
  CHECK_THROWS_AS(paired_t_test(Column{1, 2}, Column{1, 2}), DegenerateError);
}

TEST_CASE("chi-square goodness of fit") {
  const auto same = chi_square_gof(Column{10, 20}, Column{10, 20});
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);

  const auto r = chi_square_gof(Column{26, 88}, Column{57, 57});
  CHECK(r.statistic == doctest::Approx(2.0 * 31 * 31 / 57.0).epsilon(1e-14));
  CHECK(r.statistic == doctest::Approx(33.72).epsilon(1e-4));
  CHECK(r.df == 1.0);
  CHECK(std::fabs(r.p_value - ref::chi_square_upper_quadrature(r.statistic, 1.0)) < 1e-6);

  const auto three = chi_square_gof(Column{12, 30, 18}, Column{20, 20, 20});
  CHECK(three.df == 2.0);
  CHECK(std::fabs(three.p_value - ref::chi_square_upper_quadrature(three.statistic, 2.0)) <
        1e-6);

  CHECK_THROWS_AS(chi_square_gof(Column{1, 2}, Column{0, 3}), PreconditionError);
}

TEST_CASE("p-values lie in [0, 1] under fuzzing") {
  Rng rng(77);
  for (int i = 0; i < 2000; ++i) {
    const double t = rng.normal(0.0, 20.0);
    const double df = 1.0 + rng.uniform() * 500.0;
    const double p = student_t_two_sided_p(t, df);
    REQUIRE(p >= 0.0);
    REQUIRE(p <= 1.0);
    const double c = chi_square_upper_p(std::fabs(t) * 3.0, df);
    REQUIRE(c >= 0.0);
    REQUIRE(c <= 1.0);
  }
  for (int i = 0; i < 300; ++i) {
    Column a(2 + rng.below(20)), b(a.size());
    for (size_t k = 0; k < a.size(); ++k) {
      a[k] = rng.normal();
      b[k] = rng.normal();
    }
    const auto r = paired_t_test(a, b);
    REQUIRE((r.p_value >= 0.0 && r.p_value <= 1.0));
    const auto w = welch_t_test(a, b);
    REQUIRE((w.p_value >= 0.0 && w.p_value <= 1.0));
  }
}

TEST_CASE("kappa fixtures") {
  // Three raters, four items. Pairwise kappas by hand: 7/11, 1/5, -1/5.
  const std::vector<std::vector<int>> ratings = {{0, 0, 1}, {1, 1, 1}, {2, 2, 0}, {0, 1, 0}};
  const auto r = multi_rater_kappa(ratings);
  CHECK(std::fabs(r.statistic - 7.0 / 33.0) < 1e-12);
  CHECK(r.p_value >= 0.0);
  CHECK(r.p_value <= 1.0);

  const std::vector<std::vector<int>> perfect = {{0, 0, 0}, {1, 1, 1}, {0, 0, 0}, {2, 2, 2}};
  CHECK(multi_rater_kappa(perfect).statistic == doctest::Approx(1.0));

  const std::vector<std::vector<int>> single = {{1, 1}, {1, 1}, {1, 1}};
  CHECK_THROWS_AS(multi_rater_kappa(single), DegenerateError);
  CHECK_THROWS_AS(multi_rater_kappa({{1}, {0}}), PreconditionError);
}

TEST_CASE("kappa of independent random ratings is near zero") {
  Rng rng(2024);
  std::vector<std::vector<int>> ratings(20000, std::vector<int>(3));
  for (auto& row : ratings) {
    for (int& v : row) v = static_cast<int>(rng.below(3));
  }
  CHECK(std::fabs(multi_rater_kappa(ratings).statistic) < 0.05);
}

TEST_CASE("welch t matches the textbook formula") {
  const Column a = {3.1, 2.9, 3.5, 3.8, 2.7};
  const Column b = {2.0, 2.6, 2.2, 1.9, 2.4, 2.1, 2.8};
  const double ma = mean(a), mb = mean(b), va = variance(a), vb = variance(b);
  const double se2 = va / 5 + vb / 7;
  const double t = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 / (std::pow(va / 5, 2) / 4 + std::pow(vb / 7, 2) / 6);
  const auto r = welch_t_test(a, b);
  CHECK(r.statistic == doctest::Approx(t).epsilon(1e-12));
  CHECK(r.df == doctest::Approx(df).epsilon(1e-12));
  CHECK(std::fabs(r.p_value - ref::t_two_sided_quadrature(t, df)) < 1e-6);
}
