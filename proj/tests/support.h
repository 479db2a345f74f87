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

// Shared fixtures and reference implementations for the test binaries.
// The reference code here deliberately avoids the library's numerics (no
// Eigen, no Boost): plain loops, quadrature and Gaussian elimination.

#ifndef SDL_TESTS_SUPPORT_H_
#define SDL_TESTS_SUPPORT_H_

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sdl/corpus.h"
#include "sdl/neural.h"
#include "sdl/random.h"
#include "sdl/text.h"

namespace sdl::testing {

inline std::string data_path(const std::string& name) {
  return std::string(SDL_DATA_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- BLEU --------------------------------------------------------------------

struct OracleBleu {
  std::vector<long> matches;
  std::vector<long> totals;
  long cand_len = 0;
  long ref_len = 0;
  double score = 0.0;
};

inline bool same_gram(const Tokens& a, size_t i, const Tokens& b, size_t j, size_t n) {
  for (size_t k = 0; k < n; ++k) {
    if (a[i + k] != b[j + k]) return false;
  }
  return true;
}

// Counts every n-gram by rescanning both sentences; no hashing or maps.
inline OracleBleu oracle_bleu(const std::vector<Tokens>& cands, const std::vector<Tokens>& refs,
                              size_t max_n) {
  OracleBleu o;
  o.matches.assign(max_n, 0);
  o.totals.assign(max_n, 0);
  for (size_t p = 0; p < cands.size(); ++p) {
    const Tokens& c = cands[p];
    const Tokens& r = refs[p];
    o.cand_len += static_cast<long>(c.size());
    o.ref_len += static_cast<long>(r.size());
    for (size_t n = 1; n <= max_n; ++n) {
      if (c.size() < n) continue;
      o.totals[n - 1] += static_cast<long>(c.size() - n + 1);
      for (size_t i = 0; i + n <= c.size(); ++i) {
        bool first = true;
        for (size_t j = 0; j < i; ++j) {
          if (same_gram(c, j, c, i, n)) first = false;
        }
        if (!first) continue;
        long in_c = 0, in_r = 0;
        for (size_t j = 0; j + n <= c.size(); ++j) in_c += same_gram(c, j, c, i, n);
        for (size_t j = 0; j + n <= r.size(); ++j) in_r += same_gram(r, j, c, i, n);
        o.matches[n - 1] += std::min(in_c, in_r);
      }
    }
  }
  double log_sum = 0.0;
  int orders = 0;
  for (size_t n = 0; n < max_n; ++n) {
    if (o.totals[n] == 0) continue;
    if (o.matches[n] == 0) return o;
    log_sum += std::log(static_cast<double>(o.matches[n]) / static_cast<double>(o.totals[n]));
    ++orders;
  }
  if (orders == 0) return o;
  const double bp = o.cand_len < o.ref_len
                        ? std::exp(1.0 - static_cast<double>(o.ref_len) / o.cand_len)
                        : 1.0;
  o.score = 100.0 * bp * std::exp(log_sum / orders);
  return o;
}

// ---- quadrature ---------------------------------------------------------------

inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double t_density(double x, double df) {
  const double logc = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) -
                      0.5 * std::log(df * M_PI);
  return std::exp(logc - (df + 1) / 2 * std::log1p(x * x / df));
}

// Two-sided tail by integrating the density over [0, |t|].
inline double t_two_sided_quadrature(double t, double df) {
  const double inner =
      simpson([df](double x) { return t_density(x, df); }, 0.0, std::fabs(t), 200000);
  return std::max(0.0, 1.0 - 2.0 * inner);
}

inline double chi_square_density(double x, double df) {
  if (x <= 0) return 0.0;
  const double k = df / 2;
  return std::exp((k - 1) * std::log(x) - x / 2 - k * std::log(2.0) - std::lgamma(k));
}

// Upper tail by integrating the density over [x, x + 400].
inline double chi_square_upper_quadrature(double x, double df) {
  return simpson([df](double v) { return chi_square_density(v, df); }, x, x + 400.0, 400000);
}

// ---- linear algebra ---------------------------------------------------------

// Solves A x = b by Gauss-Jordan elimination with partial pivoting.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
  const size_t n = b.size();
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  for (size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return b;
}

// (X'X)^-1 X'y with an intercept column prepended.
inline std::vector<double> ols_oracle(const std::vector<std::vector<double>>& columns,
                                      const std::vector<double>& y) {
  const size_t n = y.size(), p = columns.size() + 1;
  auto x = [&](size_t row, size_t k) { return k == 0 ? 1.0 : columns[k - 1][row]; };
  std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
  std::vector<double> xty(p, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t a = 0; a < p; ++a) {
      xty[a] += x(i, a) * y[i];
      for (size_t b = 0; b < p; ++b) xtx[a][b] += x(i, a) * x(i, b);
    }
  }
  return solve_dense(xtx, xty);
}

// ---- LSTM reference ----------------------------------------------------------

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// One LSTM step written out element by element. w is 4h x (e + h) with gate
// rows input, forget, cell, output; x is the input embedding.
inline void lstm_cell_reference(const std::vector<std::vector<double>>& w,
                                const std::vector<double>& b, const std::vector<double>& x,
                                std::vector<double>& h, std::vector<double>& c) {
  const size_t hd = h.size(), e = x.size();
  std::vector<double> z(4 * hd);
  for (size_t r = 0; r < 4 * hd; ++r) {
    double s = b[r];
    for (size_t k = 0; k < e; ++k) s += w[r][k] * x[k];
    for (size_t k = 0; k < hd; ++k) s += w[r][e + k] * h[k];
    z[r] = s;
  }
  std::vector<double> h2(hd), c2(hd);
  for (size_t k = 0; k < hd; ++k) {
    const double ig = logistic(z[k]);
    const double fg = logistic(z[hd + k]);
    const double gg = std::tanh(z[2 * hd + k]);
    const double og = logistic(z[3 * hd + k]);
    c2[k] = fg * c[k] + ig * gg;
    h2[k] = og * std::tanh(c2[k]);
  }
  h = h2;
  c = c2;
}

template <typename M>
std::vector<std::vector<double>> to_rows(const M& m) {
  std::vector<std::vector<double>> rows(m.rows(), std::vector<double>(m.cols()));
  for (long r = 0; r < m.rows(); ++r) {
    for (long k = 0; k < m.cols(); ++k) rows[r][k] = static_cast<double>(m(r, k));
  }
  return rows;
}

// ---- fixtures ----------------------------------------------------------------

// 32 distinct prompts, each with its own reply: 8 subjects x 4 question
// templates, replies drawn from 4 actions over a shuffled subject.
inline std::vector<std::pair<Tokens, Tokens>> toy_dialogue_corpus() {
  const std::vector<std::string> subjects = {"insurance",    "license", "inspection",
                                             "background",   "registration", "photo",
                                             "payment",      "trip"};
  const std::vector<std::string> asks = {"when is my %s ready ?", "what about the %s step",
                                         "is the %s done", "help with %s please"};
  const std::vector<std::string> acts = {"upload the %s card today .",
                                         "we will review your %s soon .",
                                         "your %s is complete !", "please resend the %s form ."};
  std::vector<std::pair<Tokens, Tokens>> out;
  char q[128], r[128];
  for (size_t i = 0; i < subjects.size(); ++i) {
    for (size_t j = 0; j < asks.size(); ++j) {
      std::snprintf(q, sizeof q, asks[j].c_str(), subjects[i].c_str());
      std::snprintf(r, sizeof r, acts[(i + j) % 4].c_str(), subjects[(i * 3 + j) % 8].c_str());
      out.emplace_back(tokenize(q), tokenize(r));
    }
  }
  return out;
}

// Toy examples with social vectors spread over [0, 1].
inline std::vector<neural::Example> toy_examples(neural::Vocab* vocab_out = nullptr) {
  const auto toy = toy_dialogue_corpus();
  std::vector<Tokens> corpus;
  for (const auto& [q, r] : toy) {
    corpus.push_back(q);
    corpus.push_back(r);
  }
  neural::Vocab vocab = neural::Vocab::build(corpus, 1);
  std::vector<neural::Example> ex;
  for (size_t i = 0; i < toy.size(); ++i) {
    const SocialVector s{static_cast<double>(i % 4) / 3.0, static_cast<double>(i % 5) / 4.0};
    ex.push_back(neural::make_example(vocab, toy[i].first, toy[i].second, s));
  }
  if (vocab_out) *vocab_out = vocab;
  return ex;
}

// Random small examples over a vocabulary of `vocab_size` (reserved ids
// included); lengths vary so batches exercise masking.
inline std::vector<neural::Example> random_examples(const neural::Vocab& vocab, size_t count,
                                                    uint64_t seed) {
  Rng rng(seed);
  const auto v = static_cast<uint64_t>(vocab.size() - neural::Vocab::kNumReserved);
  std::vector<neural::Example> out;
  for (size_t i = 0; i < count; ++i) {
    neural::Example e;
    const size_t ls = 1 + rng.below(5), lt = 1 + rng.below(5);
    for (size_t k = 0; k < ls; ++k) {
      e.source.push_back(static_cast<int32_t>(neural::Vocab::kNumReserved + rng.below(v)));
    }
    e.source.push_back(neural::Vocab::kEos);
    e.target.push_back(neural::Vocab::kSos);
    for (size_t k = 0; k < lt; ++k) {
      e.target.push_back(static_cast<int32_t>(neural::Vocab::kNumReserved + rng.below(v)));
    }
    e.target.push_back(neural::Vocab::kEos);
    e.social = {rng.uniform(), rng.uniform()};
    out.push_back(std::move(e));
  }
  return out;
}

// Vocabulary of exactly `size` entries: the reserved ids plus w0, w1, ...
inline neural::Vocab numbered_vocab(size_t size) {
  neural::Vocab v;
  for (size_t i = neural::Vocab::kNumReserved; i < size; ++i) v.add("w" + std::to_string(i));
  return v;
}

}  // namespace sdl::testing

#endif  // SDL_TESTS_SUPPORT_H_
