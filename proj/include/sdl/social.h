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

// The two-dimensional social vector (politeness, positivity) of an agent
// reply, computed from the politeness classifier and the sentiment analyzer.

#ifndef SDL_SOCIAL_H_
#define SDL_SOCIAL_H_

#include <span>
#include <string>

#include "sdl/corpus.h"
#include "sdl/politeness.h"
#include "sdl/sentiment.h"

namespace sdl {

struct SocialVector {
  double politeness = 0.0;
  double positivity = 0.0;  // positive-sentiment proportion
};

enum class SocialFeature { kPoliteness, kPositivity };
const char* social_feature_name(SocialFeature f);
SocialFeature parse_social_feature(std::string_view name);

class SocialScorer {
 public:
  SocialScorer(PolitenessModel politeness, SentimentLexicon lexicon);

  double politeness(const Utterance& u) const;
  double positivity(const Utterance& u) const;
  double score(const Utterance& u, SocialFeature f) const;
  SocialVector score(const Utterance& u) const;

  const PolitenessModel& politeness_model() const { return politeness_; }
  const SentimentLexicon& lexicon() const { return lexicon_; }

 private:
  PolitenessModel politeness_;
  SentimentLexicon lexicon_;
};

// Bundled politeness model with the bundled mini lexicon.
const SocialScorer& default_social_scorer();

}  // namespace sdl

#endif  // SDL_SOCIAL_H_
