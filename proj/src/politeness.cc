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

#include "sdl/politeness.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string_view>

#include <Eigen/Dense>

#include "sdl/error.h"

namespace sdl {
namespace {

constexpr const char* kStrategyNames[kNumStrategies] = {
    "gratitude",          "apology",
    "please",             "please_start",
    "indirect_could_you", "indirect_would_you",
    "greeting",           "deference",
    "positive_lexicon",   "negative_lexicon",
    "hedge",              "first_person",
    "first_person_start", "second_person",
    "second_person_start", "question_direct",
    "question_indirect",  "factuality",
    "counterfactual_modal", "indicative_modal",
    "sentence_initial_please_absent",
};

using WordSet = std::set<std::string, std::less<>>;

const WordSet kGratitude = {"thank", "thanks", "thx", "appreciate",
                            "appreciated", "appreciates", "grateful"};
const WordSet kApology = {"sorry", "apologize", "apologise", "apologies",
                          "apology", "apologizing", "oops", "pardon"};
const WordSet kGreeting = {"hi", "hello", "hey", "greetings", "howdy"};
const WordSet kDeference = {"great", "good", "nice", "interesting", "cool",
                            "excellent", "awesome", "wonderful", "fantastic"};
const WordSet kPositive = {"good", "great", "nice", "excellent", "awesome",
                           "wonderful", "fantastic", "happy", "glad", "love",
                           "perfect", "amazing", "best", "helpful", "congrats",
                           "congratulations", "luck", "welcome", "pleasure",
                           "fine", "kind", "useful", "interesting", "cool"};
const WordSet kNegative = {"bad", "wrong", "problem", "issue", "fail",
                           "failed", "failing", "error", "unfortunately",
                           "difficult", "terrible", "awful", "annoying",
                           "stuck", "broken", "confused", "worried", "stupid",
                           "useless", "ridiculous", "hate", "wrongly"};
const WordSet kHedge = {"maybe", "perhaps", "possibly", "probably", "think",
                        "guess", "suppose", "seem", "seems", "somewhat",
                        "apparently", "might", "presumably"};
const WordSet kFirstPerson = {"i", "me", "my", "mine", "myself", "we", "us",
                              "our", "ours", "ourselves", "i'm", "i've",
                              "i'll", "i'd", "we're", "we've", "we'll"};
const WordSet kSecondPerson = {"you", "your", "yours", "yourself",
                               "yourselves", "you're", "you've", "you'll",
                               "you'd"};
const WordSet kWh = {"what", "why", "who", "whom", "whose", "how", "where",
                     "when", "which"};
const WordSet kFactuality = {"actually", "really", "honestly", "truly",
                             "obviously", "clearly", "frankly", "surely",
                             "definitely"};
const WordSet kCounterfactual = {"could", "would"};
const WordSet kIndicative = {"can", "will"};

bool is_sentence_end(const std::string& t) {
  return t == "." || t == "!" || t == "?";
}

struct Sentence {
  size_t begin;
  size_t end;    // exclusive, includes the terminator when present
  size_t first;  // first non-punctuation token, or end
};

std::vector<Sentence> sentences(std::span<const std::string> tokens) {
  std::vector<Sentence> out;
  size_t begin = 0;
  for (size_t i = 0; i <= tokens.size(); ++i) {
    const bool last = i == tokens.size();
    if (last || is_sentence_end(tokens[i])) {
      const size_t end = last ? i : i + 1;
      if (end > begin) {
        size_t first = begin;
        while (first < end && is_punctuation(tokens[first])) ++first;
        out.push_back({begin, end, first});
      }
      begin = end;
    }
  }
  return out;
}

}  // namespace

const char* strategy_name(Strategy s) {
  return kStrategyNames[static_cast<size_t>(s)];
}

Strategy parse_strategy(std::string_view name) {
  for (size_t i = 0; i < kNumStrategies; ++i) {
    if (name == kStrategyNames[i]) return static_cast<Strategy>(i);
  }
  throw FormatError("unknown politeness strategy '" + std::string(name) + "'");
}

std::vector<StrategyHit> detect_strategies(std::span<const std::string> tokens) {
  std::vector<StrategyHit> hits;
  const auto sents = sentences(tokens);
  std::vector<bool> initial(tokens.size(), false);
  for (const auto& s : sents) {
    if (s.first < s.end) initial[s.first] = true;
  }
  auto add = [&](Strategy st, size_t b, size_t e) { hits.push_back({st, b, e}); };
  auto next_is = [&](size_t i, std::string_view w) {
    return i + 1 < tokens.size() && tokens[i + 1] == w;
  };

  for (size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    if (kGratitude.count(t)) add(Strategy::kGratitude, i, i + 1);
    if (kApology.count(t)) add(Strategy::kApology, i, i + 1);
    if (t == "excuse" && next_is(i, "me")) add(Strategy::kApology, i, i + 2);
    if (t == "please") {
      add(initial[i] ? Strategy::kPleaseStart : Strategy::kPlease, i, i + 1);
    }
    if (t == "could" && next_is(i, "you")) add(Strategy::kIndirectCouldYou, i, i + 2);
    if (t == "would" && next_is(i, "you")) add(Strategy::kIndirectWouldYou, i, i + 2);
    if (kGreeting.count(t)) add(Strategy::kGreeting, i, i + 1);
    const bool deference = initial[i] && kDeference.count(t);
    if (deference) add(Strategy::kDeference, i, i + 1);
    if (!deference && kPositive.count(t)) add(Strategy::kPositiveLexicon, i, i + 1);
    if (kNegative.count(t)) add(Strategy::kNegativeLexicon, i, i + 1);
    if (kHedge.count(t)) add(Strategy::kHedge, i, i + 1);
    if (kFirstPerson.count(t)) {
      add(initial[i] ? Strategy::kFirstPersonStart : Strategy::kFirstPerson, i, i + 1);
    }
    if (kSecondPerson.count(t)) {
      add(initial[i] ? Strategy::kSecondPersonStart : Strategy::kSecondPerson, i, i + 1);
    }
    if (kFactuality.count(t)) add(Strategy::kFactuality, i, i + 1);
    if (t == "in" && next_is(i, "fact")) add(Strategy::kFactuality, i, i + 2);
    if (kCounterfactual.count(t) && !next_is(i, "you")) {
      add(Strategy::kCounterfactualModal, i, i + 1);
    }
    if (kIndicative.count(t) && next_is(i, "you")) {
      add(Strategy::kIndicativeModal, i, i + 2);
    }
  }

  for (const auto& s : sents) {
    if (tokens[s.end - 1] == "?") {
      const bool wh = s.first < s.end && kWh.count(tokens[s.first]);
      add(wh ? Strategy::kQuestionDirect : Strategy::kQuestionIndirect, s.begin, s.end);
    }
    bool has_please = false;
    for (size_t i = s.begin; i < s.end; ++i) has_please |= tokens[i] == "please";
    if (has_please && !(s.first < s.end && tokens[s.first] == "please")) {
      add(Strategy::kSentenceInitialPleaseAbsent, s.begin, s.end);
    }
  }

  std::stable_sort(hits.begin(), hits.end(),
                   [](const StrategyHit& a, const StrategyHit& b) {
                     if (a.strategy != b.strategy) return a.strategy < b.strategy;
                     return a.begin < b.begin;
                   });
  return hits;
}

PolitenessFeatures featurize_politeness(std::span<const std::string> tokens) {
  PolitenessFeatures f;
  f.length_tokens = tokens.size();
  for (const auto& h : detect_strategies(tokens)) {
    ++f.strategy_counts[static_cast<size_t>(h.strategy)];
  }
  return f;
}

double PolitenessModel::linear_response(const PolitenessFeatures& f) const {
  double z = bias;
  for (size_t k = 0; k < kNumStrategies; ++k) z += weights[k] * f.strategy_counts[k];
  return z;
}

double PolitenessModel::score(const PolitenessFeatures& f) const {
  const double z = linear_response(f);
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double score_politeness(const PolitenessModel& model,
                        std::span<const std::string> tokens) {
  return model.score(featurize_politeness(tokens));
}

// ---- training ----------------------------------------------------------------

namespace {

constexpr Eigen::Index kDim = kNumStrategies + 1;  // weights then bias

double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                 const Eigen::VectorXd& theta, double reg) {
  const Eigen::VectorXd z = x * theta;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) loss += softplus(z(i)) - y(i) * z(i);
  loss /= static_cast<double>(z.size());
  return loss + 0.5 * reg * theta.head(kNumStrategies).squaredNorm();
}

Eigen::MatrixXd design(std::span<const LabeledText> data) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), kDim);
  for (size_t i = 0; i < data.size(); ++i) {
    const auto f = featurize_politeness(data[i].tokens);
    for (size_t k = 0; k < kNumStrategies; ++k) x(i, k) = f.strategy_counts[k];
    x(i, kNumStrategies) = 1.0;
  }
  return x;
}

Eigen::VectorXd labels(std::span<const LabeledText> data) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(data.size()));
  for (size_t i = 0; i < data.size(); ++i) y(i) = data[i].label;
  return y;
}

Eigen::VectorXd pack(const PolitenessModel& m) {
  Eigen::VectorXd theta(kDim);
  for (size_t k = 0; k < kNumStrategies; ++k) theta(k) = m.weights[k];
  theta(kNumStrategies) = m.bias;
  return theta;
}

}  // namespace

double politeness_objective(std::span<const LabeledText> data,
                            const PolitenessModel& model, double reg) {
  return objective(design(data), labels(data), pack(model), reg);
}

PolitenessModel train_politeness(std::span<const LabeledText> data, double reg,
                                 uint64_t seed, std::string corpus_id,
                                 std::vector<double>* loss_history) {
  if (!(reg > 0.0) || !std::isfinite(reg)) {
    throw PreconditionError("politeness regularization must be positive");
  }
  std::set<double> distinct;
  for (const auto& d : data) {
    if (!(d.label >= 0.0 && d.label <= 1.0)) {
      throw PreconditionError("politeness labels must lie in [0, 1]");
    }
    distinct.insert(d.label);
  }
  if (distinct.size() < 2) {
    throw TrainingError("politeness training needs at least two distinct labels");
  }
  const Eigen::MatrixXd x = design(data);
  const Eigen::VectorXd y = labels(data);
  const double n = static_cast<double>(data.size());
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(kDim);
  double f = objective(x, y, theta, reg);
  if (loss_history) loss_history->assign(1, f);

  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd z = x * theta;
    Eigen::VectorXd resid(z.size()), curv(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double p = sigmoid(z(i));
      resid(i) = p - y(i);
      curv(i) = p * (1.0 - p);
    }
    Eigen::VectorXd grad = x.transpose() * resid / n;
    grad.head(kNumStrategies) += reg * theta.head(kNumStrategies);
    if (grad.lpNorm<Eigen::Infinity>() < 1e-12) break;
    Eigen::MatrixXd hess = x.transpose() * curv.asDiagonal() * x / n;
    hess.diagonal().head(kNumStrategies).array() += reg;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 50; ++k, t *= 0.5) {
      const Eigen::VectorXd cand = theta - t * step;
      const double fc = objective(x, y, cand, reg);
      if (fc < f) {
        theta = cand;
        f = fc;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    if (loss_history) loss_history->push_back(f);
  }

  PolitenessModel m;
  for (size_t k = 0; k < kNumStrategies; ++k) m.weights[k] = theta(k);
  m.bias = theta(kNumStrategies);
  m.corpus_id = std::move(corpus_id);
  m.seed = seed;
  m.regularization = reg;
  for (double w : m.weights) {
    if (!std::isfinite(w)) throw TrainingError("politeness weights diverged");
  }
  return m;
}

// ---- model file --------------------------------------------------------------

namespace {

constexpr std::string_view kModelHeader = "#sdl-politeness v1";

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_hex(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw FormatError("politeness model: bad number '" + s + "'");
  }
  return v;
}

}  // namespace

void save_politeness_model(std::ostream& out, const PolitenessModel& model) {
  out << kModelHeader << '\n';
  out << "corpus_id\t" << model.corpus_id << '\n';
  out << "seed\t" << model.seed << '\n';
  out << "regularization\t" << hex(model.regularization) << '\n';
  out << "bias\t" << hex(model.bias) << '\n';
  for (size_t k = 0; k < kNumStrategies; ++k) {
    out << "weight\t" << kStrategyNames[k] << '\t' << hex(model.weights[k]) << '\n';
  }
}

PolitenessModel load_politeness_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kModelHeader) {
    throw FormatError("politeness model: missing header '" +
                      std::string(kModelHeader) + "'");
  }
  PolitenessModel m;
  std::array<bool, kNumStrategies> seen{};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    size_t start = 0;
    for (size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '\t') {
        f.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (f[0] == "corpus_id" && f.size() == 2) {
      m.corpus_id = f[1];
    } else if (f[0] == "seed" && f.size() == 2) {
      m.seed = std::stoull(f[1]);
    } else if (f[0] == "regularization" && f.size() == 2) {
      m.regularization = parse_hex(f[1]);
    } else if (f[0] == "bias" && f.size() == 2) {
      m.bias = parse_hex(f[1]);
    } else if (f[0] == "weight" && f.size() == 3) {
      const auto k = static_cast<size_t>(parse_strategy(f[1]));
      m.weights[k] = parse_hex(f[2]);
      seen[k] = true;
    } else {
      throw FormatError("politeness model: unrecognized line '" + line + "'");
    }
  }
  for (size_t k = 0; k < kNumStrategies; ++k) {
    if (!seen[k]) {
      throw FormatError(std::string("politeness model: missing weight for ") +
                        kStrategyNames[k]);
    }
  }
  return m;
}

// ---- labeled corpus ----------------------------------------------------------

bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  int c = in.get();
  if (c == EOF) return false;
  std::string cur;
  bool quoted = false;
  for (; c != EOF; c = in.get()) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          cur += '"';
          in.get();
        } else {
          quoted = false;
        }
      } else {
        cur += static_cast<char>(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      cur += static_cast<char>(c);
    }
  }
  fields.push_back(std::move(cur));
  return true;
}

namespace {

// Linear interpolation between order statistics.
double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

std::vector<LabeledText> load_politeness_csv(std::istream& in) {
  std::vector<std::string> fields;
  if (!read_csv_record(in, fields)) throw FormatError("politeness csv: empty input");
  if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) {
    fields[0].erase(0, 3);
  }
  auto col = [&](std::string_view name) {
    auto it = std::find(fields.begin(), fields.end(), name);
    if (it == fields.end()) {
      throw FormatError("politeness csv: missing column '" + std::string(name) + "'");
    }
    return static_cast<size_t>(it - fields.begin());
  };
  const size_t text_col = col("Request");
  const size_t score_col = col("Normalized Score");
  std::vector<std::string> texts;
  std::vector<double> scores;
  int line_no = 1;
  while (read_csv_record(in, fields)) {
    ++line_no;
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() <= std::max(text_col, score_col)) {
      throw FormatError("politeness csv record " + std::to_string(line_no) +
                        ": too few fields");
    }
    char* end = nullptr;
    const double s = std::strtod(fields[score_col].c_str(), &end);
    if (end == fields[score_col].c_str()) {
      throw FormatError("politeness csv record " + std::to_string(line_no) +
                        ": bad score '" + fields[score_col] + "'");
    }
    texts.push_back(fields[text_col]);
    scores.push_back(s);
  }
  if (scores.size() < 4) throw FormatError("politeness csv: too few records");
  const double q25 = quantile(scores, 0.25);
  const double q75 = quantile(scores, 0.75);
  std::vector<LabeledText> out;
  for (size_t i = 0; i < texts.size(); ++i) {
    if (scores[i] >= q75) {
      out.push_back({tokenize(redact_pii(texts[i])), 1.0});
    } else if (scores[i] <= q25) {
      out.push_back({tokenize(redact_pii(texts[i])), 0.0});
    }
  }
  return out;
}

const PolitenessModel& default_politeness_model() {
  static const PolitenessModel kModel = [] {
    std::istringstream in(bundled_politeness_csv());
    const auto data = load_politeness_csv(in);
    return train_politeness(data, 0.1, 0, "bundled-requests-v1");
  }();
  return kModel;
}

}  // namespace sdl
