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

// Column transforms, random-intercept regression, and the significance and
// agreement tests used by the analyses.

#ifndef SDL_STATS_H_
#define SDL_STATS_H_

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace sdl::stats {

using Column = std::vector<double>;

double mean(std::span<const double> x);
// Sample variance (n - 1 denominator).
double variance(std::span<const double> x);
double sample_sd(std::span<const double> x);

// (x - mean) / sample_sd. Throws DegenerateError on a constant column.
Column standardize(std::span<const double> x);
// log1p then standardize. Throws on negative input.
Column log_standardize(std::span<const double> x);

class FeatureTable {
 public:
  FeatureTable() = default;
  explicit FeatureTable(std::vector<std::string> groups);

  // Adds or replaces a column. Length must equal n_rows().
  void set(const std::string& name, Column values);
  const Column& column(const std::string& name) const;
  bool has(const std::string& name) const;
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::string>& groups() const { return groups_; }
  size_t n_rows() const { return groups_.size(); }

  // Rows where keep[i] is true.
  FeatureTable filter(const std::vector<bool>& keep) const;

 private:
  std::vector<std::string> groups_;
  std::vector<std::string> names_;
  std::vector<Column> columns_;
};

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double t_value = 0.0;
  double p_value = 1.0;
};

struct RegressionFit {
  std::string dependent;
  std::vector<Coefficient> coefficients;  // "(intercept)" first
  double random_intercept_variance = 0.0;
  double residual_variance = 0.0;
  double df = 0.0;  // for coefficient t tests
  double reml_log_likelihood = 0.0;
  size_t n_obs = 0;
  size_t n_groups = 0;
  int iterations = 0;
  bool converged = false;

  const Coefficient& at(const std::string& name) const;
};

struct RandomInterceptOptions {
  bool fix_group_variance_zero = false;
  double tolerance = 1e-8;  // on the group variance
  int max_iterations = 200;
};

// y = X beta + u_group + e with u ~ N(0, s_u^2), e ~ N(0, s_e^2), fitted by
// REML. The variance ratio s_u^2 / s_e^2 is found by maximizing the profiled
// REML likelihood; each evaluation solves the GLS problem for beta. An
// intercept is always included.
RegressionFit fit_random_intercept(const FeatureTable& table,
                                   const std::string& dependent,
                                   const std::vector<std::string>& covariates,
                                   const RandomInterceptOptions& options = {});

// Table-1 style coefficient table; stars for p < 0.05 / 0.01 / 0.001.
std::string significance_stars(double p);
std::string format_regression_table(std::span<const RegressionFit> fits,
                                    std::span<const std::string> titles,
                                    std::span<const std::string> rows);
nlohmann::json regression_to_json(const RegressionFit& fit);

enum class TestKind { kPairedT, kWelchT, kChiSquare, kKappa };
const char* test_kind_name(TestKind k);

struct TestResult {
  TestKind kind = TestKind::kPairedT;
  double statistic = 0.0;
  double df = 1.0;
  double p_value = 1.0;
};

nlohmann::json test_to_json(const TestResult& r);

// Two-sided p-value of a Student t statistic.
double student_t_two_sided_p(double t, double df);
double chi_square_upper_p(double chi2, double df);

TestResult paired_t_test(std::span<const double> a, std::span<const double> b);
// Unequal-variance two-sample t test with Welch-Satterthwaite df.
TestResult welch_t_test(std::span<const double> a, std::span<const double> b);
TestResult chi_square_gof(std::span<const double> observed,
                          std::span<const double> expected);

// ratings[item][rater] holds a category id. Light's kappa: the mean of the
// pairwise Cohen kappas. df is the item count; the p-value is a normal
// approximation using the mean of the pairwise null standard errors.
TestResult multi_rater_kappa(const std::vector<std::vector<int>>& ratings);

}  // namespace sdl::stats

#endif  // SDL_STATS_H_
