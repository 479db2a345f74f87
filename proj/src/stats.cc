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

#include "sdl/stats.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/minima.hpp>

#include "sdl/error.h"

namespace sdl::stats {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr char kIntercept[] = "(intercept)";

void require_finite(std::span<const double> x, const char* what) {
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw PreconditionError(std::string(what) + ": non-finite value");
    }
  }
}

}  // namespace

double mean(std::span<const double> x) {
  if (x.empty()) throw PreconditionError("mean of empty column");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw PreconditionError("variance needs two values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double sample_sd(std::span<const double> x) { return std::sqrt(variance(x)); }

Column standardize(std::span<const double> x) {
  require_finite(x, "standardize");
  if (x.size() < 2 ||
      std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) {
    throw DegenerateError("standardize: column needs two distinct values");
  }
  const double m = mean(x);
  const double sd = sample_sd(x);
  Column out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - m) / sd;
  return out;
}

Column log_standardize(std::span<const double> x) {
  Column logged(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0)) {
      throw PreconditionError("log_standardize: negative value " +
                              std::to_string(x[i]));
    }
    logged[i] = std::log1p(x[i]);
  }
  return standardize(logged);
}

// ---- FeatureTable ----------------------------------------------------------

FeatureTable::FeatureTable(std::vector<std::string> groups)
    : groups_(std::move(groups)) {}

void FeatureTable::set(const std::string& name, Column values) {
  if (values.size() != n_rows()) {
    throw PreconditionError("column '" + name + "' has " +
                            std::to_string(values.size()) + " rows, table has " +
                            std::to_string(n_rows()));
  }
  for (size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) {
      columns_[i] = std::move(values);
      return;
    }
  }
  names_.push_back(name);
  columns_.push_back(std::move(values));
}

const Column& FeatureTable::column(const std::string& name) const {
  for (size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return columns_[i];
  }
  throw PreconditionError("no column named '" + name + "'");
}

bool FeatureTable::has(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

FeatureTable FeatureTable::filter(const std::vector<bool>& keep) const {
  if (keep.size() != n_rows()) throw PreconditionError("filter mask size");
  std::vector<std::string> groups;
  for (size_t i = 0; i < n_rows(); ++i) {
    if (keep[i]) groups.push_back(groups_[i]);
  }
  FeatureTable out(std::move(groups));
  for (size_t c = 0; c < names_.size(); ++c) {
    Column col;
    for (size_t i = 0; i < n_rows(); ++i) {
      if (keep[i]) col.push_back(columns_[c][i]);
    }
    out.set(names_[c], std::move(col));
  }
  return out;
}

// ---- random-intercept regression -------------------------------------------

const Coefficient& RegressionFit::at(const std::string& name) const {
  for (const auto& c : coefficients) {
    if (c.name == name) return c;
  }
  throw PreconditionError("no coefficient named '" + name + "'");
}

namespace {

// Per-group sufficient statistics; all likelihood evaluations are O(G p^2).
struct GroupStats {
  double n = 0;
  MatrixXd xtx;
  VectorXd xsum;
  VectorXd xty;
  double ysum = 0;
  double yty = 0;
};

struct GlsSolution {
  VectorXd beta;
  MatrixXd m;  // X' H^-1 X
  double rss = 0;  // r' H^-1 r
  double log_det_h = 0;
  double log_det_m = 0;
  bool ok = false;
};

class RemlProblem {
 public:
  RemlProblem(std::vector<GroupStats> groups, size_t n, size_t p)
      : groups_(std::move(groups)), n_(n), p_(p) {}

  GlsSolution solve(double ratio) const {
    GlsSolution s;
    s.m = MatrixXd::Zero(p_, p_);
    VectorXd v = VectorXd::Zero(p_);
    double yhy = 0;
    for (const auto& g : groups_) {
      const double w = ratio / (1.0 + g.n * ratio);
      s.m += g.xtx - w * g.xsum * g.xsum.transpose();
      v += g.xty - w * g.ysum * g.xsum;
      yhy += g.yty - w * g.ysum * g.ysum;
      s.log_det_h += std::log1p(g.n * ratio);
    }
    Eigen::LLT<MatrixXd> llt(s.m);
    if (llt.info() != Eigen::Success) return s;
    s.beta = llt.solve(v);
    s.rss = std::max(0.0, yhy - v.dot(s.beta));
    s.log_det_m = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    s.ok = true;
    return s;
  }

  // Profiled REML log-likelihood, constants dropped.
  double profile(double ratio) const {
    GlsSolution s = solve(ratio);
    if (!s.ok || s.rss <= 0) return -std::numeric_limits<double>::infinity();
    const double dof = static_cast<double>(n_ - p_);
    return -0.5 * (dof * std::log(s.rss / dof) + s.log_det_h + s.log_det_m);
  }

 private:
  std::vector<GroupStats> groups_;
  size_t n_;
  size_t p_;
};

// Names of columns in each null-space direction of X'X after unit scaling.
std::vector<std::string> collinear_columns(const MatrixXd& xtx,
                                           const std::vector<std::string>& names) {
  const Eigen::Index p = xtx.rows();
  VectorXd scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    scale(j) = xtx(j, j) > 0 ? 1.0 / std::sqrt(xtx(j, j)) : 0.0;
  }
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (scale(j) == 0.0) out.push_back(names[j]);
  }
  if (!out.empty()) return out;
  MatrixXd corr = scale.asDiagonal() * xtx * scale.asDiagonal();
  Eigen::FullPivLU<MatrixXd> lu(corr);
  lu.setThreshold(1e-10);
  if (lu.rank() == p) return out;
  MatrixXd kernel = lu.kernel();
  std::set<Eigen::Index> involved;
  for (Eigen::Index k = 0; k < kernel.cols(); ++k) {
    const double mx = kernel.col(k).cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < p; ++j) {
      if (std::abs(kernel(j, k)) > 1e-6 * mx) involved.insert(j);
    }
  }
  for (auto j : involved) out.push_back(names[j]);
  return out;
}

void fill_coefficients(RegressionFit& fit, const std::vector<std::string>& names,
                       const VectorXd& beta, const MatrixXd& m,
                       double sigma2) {
  MatrixXd cov = m.inverse() * sigma2;
  fit.coefficients.clear();
  for (size_t j = 0; j < names.size(); ++j) {
    Coefficient c;
    c.name = names[j];
    c.estimate = beta(j);
    c.std_error = std::sqrt(std::max(0.0, cov(j, j)));
    if (c.std_error > 0) {
      c.t_value = c.estimate / c.std_error;
      c.p_value = student_t_two_sided_p(c.t_value, fit.df);
    } else {
      c.t_value = c.estimate == 0 ? 0.0
                                  : std::copysign(
                                        std::numeric_limits<double>::infinity(),
                                        c.estimate);
      c.p_value = c.estimate == 0 ? 1.0 : 0.0;
    }
    fit.coefficients.push_back(c);
  }
}

}  // namespace

RegressionFit fit_random_intercept(const FeatureTable& table,
                                   const std::string& dependent,
                                   const std::vector<std::string>& covariates,
                                   const RandomInterceptOptions& options) {
  const size_t n = table.n_rows();
  std::vector<std::string> names = {kIntercept};
  names.insert(names.end(), covariates.begin(), covariates.end());
  const size_t p = names.size();
  if (n <= p) {
    throw PreconditionError("regression needs more rows than coefficients");
  }
  const Column& y = table.column(dependent);
  require_finite(y, dependent.c_str());
  std::vector<const Column*> cols;
  for (const auto& c : covariates) {
    cols.push_back(&table.column(c));
    require_finite(*cols.back(), c.c_str());
  }

  std::map<std::string, std::vector<size_t>> rows_by_group;
  for (size_t i = 0; i < n; ++i) rows_by_group[table.groups()[i]].push_back(i);
  if (rows_by_group.size() < 2) {
    throw PreconditionError("regression needs at least 2 groups");
  }

  std::vector<GroupStats> groups;
  MatrixXd xtx = MatrixXd::Zero(p, p);
  VectorXd x(p);
  for (const auto& [id, rows] : rows_by_group) {
    GroupStats g;
    g.n = static_cast<double>(rows.size());
    g.xtx = MatrixXd::Zero(p, p);
    g.xsum = VectorXd::Zero(p);
    g.xty = VectorXd::Zero(p);
    for (size_t i : rows) {
      x(0) = 1.0;
      for (size_t j = 1; j < p; ++j) x(j) = (*cols[j - 1])[i];
      g.xtx.selfadjointView<Eigen::Lower>().rankUpdate(x);
      g.xsum += x;
      g.xty += y[i] * x;
      g.ysum += y[i];
      g.yty += y[i] * y[i];
    }
    g.xtx = g.xtx.selfadjointView<Eigen::Lower>();
    xtx += g.xtx;
    groups.push_back(std::move(g));
  }

  if (auto bad = collinear_columns(xtx, names); !bad.empty()) {
    std::string msg = "design matrix is rank deficient; collinear columns:";
    for (const auto& b : bad) msg += " " + b;
    throw SingularityError(msg);
  }

  RegressionFit fit;
  fit.dependent = dependent;
  fit.n_obs = n;
  fit.n_groups = rows_by_group.size();

  RemlProblem problem(std::move(groups), n, p);
  const double dof = static_cast<double>(n - p);
  GlsSolution ols = problem.solve(0.0);
  const double y_scale = [&] {
    double s = 0;
    for (double v : y) s += v * v;
    return s;
  }();

  double ratio = 0.0;
  const bool exact_fit = ols.rss <= 1e-24 * std::max(1.0, y_scale);
  if (!options.fix_group_variance_zero && !exact_fit) {
    // Bracket the maximum: grow the upper end while the profile improves.
    double hi = 1.0;
    double f_hi = problem.profile(hi);
    for (int k = 0; k < 60; ++k) {
      const double f_next = problem.profile(2.0 * hi);
      if (!(f_next > f_hi)) break;
      hi *= 2.0;
      f_hi = f_next;
    }
    hi *= 2.0;
    boost::uintmax_t iters = static_cast<boost::uintmax_t>(options.max_iterations);
    auto neg = [&](double r) { return -problem.profile(r); };
    auto [arg, val] = boost::math::tools::brent_find_minima(neg, 0.0, hi, 52, iters);
    fit.iterations = static_cast<int>(iters);
    fit.converged = fit.iterations < options.max_iterations;
    ratio = arg;
    // The boundary is a valid REML solution and Brent never evaluates it.
    const double f0 = problem.profile(0.0);
    if (f0 >= -val) ratio = 0.0;
    // Tolerance refers to the variance scale; snap negligible ratios to 0.
    GlsSolution at = problem.solve(ratio);
    if (ratio * at.rss / dof < options.tolerance) ratio = 0.0;
  } else {
    fit.converged = true;
  }

  GlsSolution sol = problem.solve(ratio);
  double sigma2 = sol.rss / dof;
  if (!(sigma2 > 0)) sigma2 = std::numeric_limits<double>::min();
  fit.residual_variance = sigma2;
  fit.random_intercept_variance = ratio * sigma2;
  fit.df = std::max(1.0, dof - (ratio > 0 ? 1.0 : 0.0));
  fit.reml_log_likelihood =
      sol.rss > 0 ? -0.5 * (dof * std::log(sigma2) + sol.log_det_h +
                            sol.log_det_m + dof)
                  : std::numeric_limits<double>::infinity();
  fill_coefficients(fit, names, sol.beta, sol.m, sigma2);
  return fit;
}

std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

std::string format_regression_table(std::span<const RegressionFit> fits,
                                    std::span<const std::string> titles,
                                    std::span<const std::string> rows) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-22s", "Variable");
  out << buf;
  for (const auto& t : titles) {
    std::snprintf(buf, sizeof(buf), " | %-22s", t.c_str());
    out << buf;
  }
  out << "\n";
  out << std::string(22 + 25 * titles.size(), '-') << "\n";
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%-22s", row.c_str());
    out << buf;
    for (const auto& fit : fits) {
      std::string cell = "(absent)";
      for (const auto& c : fit.coefficients) {
        if (c.name == row) {
          char num[48];
          std::snprintf(num, sizeof(num), "%.3f %s", c.estimate,
                        significance_stars(c.p_value).c_str());
          cell = num;
        }
      }
      std::snprintf(buf, sizeof(buf), " | %-22s", cell.c_str());
      out << buf;
    }
    out << "\n";
  }
  out << "Coefficients are reported.  *:p<0.05, **:p<0.01, ***:p<0.001\n";
  return out.str();
}

nlohmann::json regression_to_json(const RegressionFit& fit) {
  nlohmann::json j;
  j["dependent"] = fit.dependent;
  j["n_obs"] = fit.n_obs;
  j["n_groups"] = fit.n_groups;
  j["df"] = fit.df;
  j["random_intercept_variance"] = fit.random_intercept_variance;
  j["residual_variance"] = fit.residual_variance;
  j["converged"] = fit.converged;
  auto& rows = j["coefficients"] = nlohmann::json::array();
  for (const auto& c : fit.coefficients) {
    rows.push_back({{"name", c.name},
                    {"estimate", c.estimate},
                    {"std_error", c.std_error},
                    {"t", c.t_value},
                    {"p", c.p_value},
                    {"stars", significance_stars(c.p_value)}});
  }
  return j;
}

// ---- tests -------------------------------------------------------------------

const char* test_kind_name(TestKind k) {
  switch (k) {
    case TestKind::kPairedT: return "paired_t";
    case TestKind::kWelchT: return "welch_t";
    case TestKind::kChiSquare: return "chi_square";
    case TestKind::kKappa: return "kappa";
  }
  return "?";
}

nlohmann::json test_to_json(const TestResult& r) {
  return {{"kind", test_kind_name(r.kind)},
          {"statistic", r.statistic},
          {"df", r.df},
          {"p", r.p_value}};
}

double student_t_two_sided_p(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(df);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return std::clamp(p, 0.0, 1.0);
}

double chi_square_upper_p(double chi2, double df) {
  if (std::isinf(chi2)) return 0.0;
  boost::math::chi_squared dist(df);
  return std::clamp(boost::math::cdf(boost::math::complement(dist, chi2)), 0.0, 1.0);
}

TestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw PreconditionError("paired_t_test: length mismatch (" +
                            std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) throw PreconditionError("paired_t_test: need n >= 2");
  require_finite(a, "paired_t_test");
  require_finite(b, "paired_t_test");
  std::vector<double> d(a.size());
  for (size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double md = mean(d);
  const double sd = sample_sd(d);
  const double n = static_cast<double>(d.size());
  TestResult r;
  r.kind = TestKind::kPairedT;
  r.df = n - 1.0;
  if (sd == 0.0) {
    if (md == 0.0) {
      throw DegenerateError("paired_t_test: differences are identically zero");
    }
    r.statistic = std::copysign(std::numeric_limits<double>::infinity(), md);
    r.p_value = 0.0;
    return r;
  }
  r.statistic = md / (sd / std::sqrt(n));
  r.p_value = student_t_two_sided_p(r.statistic, r.df);
  return r;
}

TestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw PreconditionError("welch_t_test: each sample needs n >= 2");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = variance(a) / na;
  const double vb = variance(b) / nb;
  TestResult r;
  r.kind = TestKind::kWelchT;
  const double diff = mean(a) - mean(b);
  if (va + vb == 0.0) {
    if (diff == 0.0) throw DegenerateError("welch_t_test: both samples constant and equal");
    r.statistic = std::copysign(std::numeric_limits<double>::infinity(), diff);
    r.df = na + nb - 2.0;
    r.p_value = 0.0;
    return r;
  }
  r.statistic = diff / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) /
         (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p_value = student_t_two_sided_p(r.statistic, r.df);
  return r;
}

TestResult chi_square_gof(std::span<const double> observed,
                          std::span<const double> expected) {
  if (observed.size() != expected.size()) {
    throw PreconditionError("chi_square_gof: length mismatch");
  }
  if (observed.size() < 2) throw PreconditionError("chi_square_gof: need >= 2 cells");
  double chi2 = 0.0;
  for (size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0.0)) {
      throw PreconditionError("chi_square_gof: expected count in cell " +
                              std::to_string(i) + " must be positive");
    }
    const double d = observed[i] - expected[i];
    chi2 += d * d / expected[i];
  }
  TestResult r;
  r.kind = TestKind::kChiSquare;
  r.statistic = chi2;
  r.df = static_cast<double>(observed.size() - 1);
  r.p_value = chi_square_upper_p(chi2, r.df);
  return r;
}

TestResult multi_rater_kappa(const std::vector<std::vector<int>>& ratings) {
  if (ratings.empty()) throw PreconditionError("kappa: no items");
  const size_t k = ratings[0].size();
  if (k < 2) throw PreconditionError("kappa: need at least 2 raters");
  for (const auto& row : ratings) {
    if (row.size() != k) throw PreconditionError("kappa: every item must be fully rated");
  }
  const double n = static_cast<double>(ratings.size());
  double kappa_sum = 0.0;
  double se_sum = 0.0;
  int pairs = 0;
  for (size_t a = 0; a < k; ++a) {
    for (size_t b = a + 1; b < k; ++b) {
      std::map<int, double> pa, pb;
      double agree = 0.0;
      for (const auto& row : ratings) {
        pa[row[a]] += 1.0 / n;
        pb[row[b]] += 1.0 / n;
        if (row[a] == row[b]) agree += 1.0;
      }
      const double po = agree / n;
      double pe = 0.0;
      double cross = 0.0;
      std::set<int> cats;
      for (auto& [c, v] : pa) cats.insert(c);
      for (auto& [c, v] : pb) cats.insert(c);
      for (int c : cats) {
        const double x = pa.count(c) ? pa[c] : 0.0;
        const double y = pb.count(c) ? pb[c] : 0.0;
        pe += x * y;
        cross += x * y * (x + y);
      }
      if (pe >= 1.0) {
        throw DegenerateError(
            "kappa: undefined, raters " + std::to_string(a) + " and " +
            std::to_string(b) + " used a single shared category");
      }
      kappa_sum += (po - pe) / (1.0 - pe);
      se_sum += std::sqrt(std::max(0.0, pe + pe * pe - cross)) /
                ((1.0 - pe) * std::sqrt(n));
      ++pairs;
    }
  }
  TestResult r;
  r.kind = TestKind::kKappa;
  r.statistic = kappa_sum / pairs;
  r.df = n;
  const double se = se_sum / pairs;
  if (se > 0) {
    boost::math::normal z;
    r.p_value = std::clamp(
        2.0 * boost::math::cdf(boost::math::complement(z, std::abs(r.statistic) / se)),
        0.0, 1.0);
  } else {
    r.p_value = r.statistic == 0 ? 1.0 : 0.0;
  }
  return r;
}

}  // namespace sdl::stats
