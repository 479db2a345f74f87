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

// Politeness strategy detection over tokens and a logistic politeness
// classifier on the strategy counts. The rule for each strategy is listed in
// docs/politeness_strategies.md.

#ifndef SDL_POLITENESS_H_
#define SDL_POLITENESS_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sdl/text.h"

namespace sdl {

enum class Strategy {
  kGratitude,
  kApology,
  kPlease,
  kPleaseStart,
  kIndirectCouldYou,
  kIndirectWouldYou,
  kGreeting,
  kDeference,
  kPositiveLexicon,
  kNegativeLexicon,
  kHedge,
  kFirstPerson,
  kFirstPersonStart,
  kSecondPerson,
  kSecondPersonStart,
  kQuestionDirect,
  kQuestionIndirect,
  kFactuality,
  kCounterfactualModal,
  kIndicativeModal,
  kSentenceInitialPleaseAbsent,
};

inline constexpr size_t kNumStrategies = 21;

const char* strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

struct StrategyHit {
  Strategy strategy;
  size_t begin = 0;  // token range [begin, end)
  size_t end = 0;
};

// Hits ordered by strategy, then position.
std::vector<StrategyHit> detect_strategies(std::span<const std::string> tokens);

struct PolitenessFeatures {
  std::array<int, kNumStrategies> strategy_counts{};
  size_t length_tokens = 0;

  int count(Strategy s) const { return strategy_counts[static_cast<size_t>(s)]; }
};

PolitenessFeatures featurize_politeness(std::span<const std::string> tokens);

struct PolitenessModel {
  std::array<double, kNumStrategies> weights{};
  double bias = 0.0;
  std::string corpus_id;
  uint64_t seed = 0;
  double regularization = 0.0;

  double linear_response(const PolitenessFeatures& f) const;
  // sigmoid(linear_response)
  double score(const PolitenessFeatures& f) const;
  double weight(Strategy s) const { return weights[static_cast<size_t>(s)]; }
};

double score_politeness(const PolitenessModel& model,
                        std::span<const std::string> tokens);

struct LabeledText {
  Tokens tokens;
  double label = 0.0;  // in [0, 1]
};

// L2-regularized logistic regression (bias unpenalized) minimizing
// mean cross-entropy + reg/2 * |w|^2, solved by damped Newton steps.
// loss_history, when given, receives the objective after every accepted step
// (first entry: the starting point).
PolitenessModel train_politeness(std::span<const LabeledText> data, double reg,
                                 uint64_t seed, std::string corpus_id = "",
                                 std::vector<double>* loss_history = nullptr);

// Objective minimized by train_politeness, for the given parameters.
double politeness_objective(std::span<const LabeledText> data,
                            const PolitenessModel& model, double reg);

// Text model file, "#sdl-politeness v1"; doubles are written as hex floats
// so a save/load round trip is exact.
void save_politeness_model(std::ostream& out, const PolitenessModel& model);
PolitenessModel load_politeness_model(std::istream& in);

// Reads a politeness-annotated request CSV with "Request" and
// "Normalized Score" columns. Scores at or above the 75th percentile become
// label 1, at or below the 25th percentile label 0; the rest are dropped.
std::vector<LabeledText> load_politeness_csv(std::istream& in);

// Minimal RFC 4180 record reader; returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields);

// Built-in labeled requests shipped with the library.
const std::string& bundled_politeness_csv();

// Model trained on the bundled requests with reg = 0.1, seed 0.
const PolitenessModel& default_politeness_model();

}  // namespace sdl

#endif  // SDL_POLITENESS_H_
