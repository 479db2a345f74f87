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

// Seeded generator of onboarding-support conversations. Driver questions
// come from topic templates (documents, background check, inspection, first
// trip) and carry PII for the redactor to remove. Agent replies answer the
// topic and are optionally wrapped with politeness and positivity markers.
// Outcomes follow a clipped linear-probability model over the standardized
// covariates listed by engagement_covariates().

#ifndef SDL_SYNTHETIC_H_
#define SDL_SYNTHETIC_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sdl/corpus.h"

namespace sdl {

// Covariate order of the engagement coefficient vectors.
const std::array<std::string, 6>& engagement_covariates();

struct SyntheticSpec {
  int n_drivers = 300;
  int min_pairs_per_driver = 4;
  int max_pairs_per_driver = 12;
  double politeness_marker_rate = 0.5;
  double positivity_marker_rate = 0.5;
  // Coefficients for responded_24h and first_trip_7d, in covariate order.
  std::vector<double> response_coefficients = {0.016, -0.105, 0.068,
                                               -0.041, 0.038, -0.047};
  std::vector<double> first_trip_coefficients = {-0.001, 0.104, 0.053,
                                                 0.010, 0.001, 0.001};
  double response_base_rate = 0.5;
  double first_trip_base_rate = 0.3;
  double driver_effect_sd = 0.05;
  double milestone_rate = 0.05;
  int n_cities = 5;
  uint64_t rng_seed = 1;

  // Throws PreconditionError when a field is out of range.
  void validate() const;
};

struct SyntheticCorpus {
  std::vector<MessagePair> pairs;
  // Per pair: number of politeness / positivity pieces in the agent reply,
  // and whether the reply is a milestone congratulation.
  std::vector<int> politeness_markers;
  std::vector<int> positivity_markers;
  std::vector<bool> milestone;
};

SyntheticCorpus generate_synthetic_corpus_detailed(const SyntheticSpec& spec);
std::vector<MessagePair> generate_synthetic_corpus(const SyntheticSpec& spec);

// True when the agent reply is a milestone congratulation ("congrats" or
// "congratulations" among its tokens).
bool is_milestone_message(const Utterance& agent_msg);
bool has_question_mark(const Utterance& u);

}  // namespace sdl

#endif  // SDL_SYNTHETIC_H_
