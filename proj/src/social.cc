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

#include "sdl/social.h"

#include "sdl/error.h"

namespace sdl {

const char* social_feature_name(SocialFeature f) {
  return f == SocialFeature::kPoliteness ? "politeness" : "positivity";
}

SocialFeature parse_social_feature(std::string_view name) {
  if (name == "politeness") return SocialFeature::kPoliteness;
  if (name == "positivity") return SocialFeature::kPositivity;
  throw FormatError("unknown social feature '" + std::string(name) + "'");
}

SocialScorer::SocialScorer(PolitenessModel politeness, SentimentLexicon lexicon)
    : politeness_(std::move(politeness)), lexicon_(std::move(lexicon)) {}

double SocialScorer::politeness(const Utterance& u) const {
  return score_politeness(politeness_, u.tokens);
}

double SocialScorer::positivity(const Utterance& u) const {
  return score_sentiment(lexicon_, u.surface_tokens).pos;
}

double SocialScorer::score(const Utterance& u, SocialFeature f) const {
  return f == SocialFeature::kPoliteness ? politeness(u) : positivity(u);
}

SocialVector SocialScorer::score(const Utterance& u) const {
  return {politeness(u), positivity(u)};
}

const SocialScorer& default_social_scorer() {
  static const SocialScorer kScorer(default_politeness_model(), mini_lexicon());
  return kScorer;
}

}  // namespace sdl
