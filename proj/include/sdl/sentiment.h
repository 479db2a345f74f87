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

// Lexicon-and-rules sentiment analyzer producing positive / negative /
// neutral proportions.
//
// Per word token (punctuation tokens are ignored; tags count as neutral
// words):
//   valence     lexicon value of the lower-cased token, 0 when absent
//   caps        an ALL-CAPS valenced token gains 0.733 in its direction when
//               some but not all words are ALL-CAPS
//   boosters    each of the 3 preceding non-lexicon tokens that is a booster
//               adds its increment in the valence direction, scaled by 1,
//               0.95, 0.9 with distance
//   negation    each of the 3 preceding non-lexicon tokens that is in the
//               lexicon's negator set multiplies the valence by -0.74
//   but         valences after the first "but" are multiplied by 1.5
// Positive valences contribute v + 1 to the positive mass, negative ones
// v - 1 to the negative mass, zeros count one neutral word. Exclamation
// marks (at most 3) add 0.292 each to the larger of the two masses. The
// three masses are normalized to proportions.

#ifndef SDL_SENTIMENT_H_
#define SDL_SENTIMENT_H_

#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace sdl {

struct SentimentScores {
  double pos = 0.0;
  double neg = 0.0;
  double neu = 1.0;
};

inline constexpr double kBoosterIncrement = 0.293;
inline constexpr double kCapsIncrement = 0.733;
inline constexpr double kNegationScale = -0.74;
inline constexpr double kButWeight = 1.5;
inline constexpr double kExclamationIncrement = 0.292;
inline constexpr int kMaxExclamations = 3;

class SentimentLexicon {
 public:
  // Default boosters and negators, no valence entries.
  SentimentLexicon();
  // Throws PreconditionError when a token has more than one role or a
  // valence lies outside [-4, 4].
  SentimentLexicon(std::unordered_map<std::string, double> valence,
                   std::unordered_map<std::string, double> boosters,
                   std::unordered_set<std::string> negators);

  // Nullptr when the token has no valence entry.
  const double* valence(const std::string& lower_token) const;
  // Signed booster increment, 0 when not a booster.
  double booster(const std::string& lower_token) const;
  bool is_negator(const std::string& lower_token) const;

  size_t size() const { return valence_.size(); }
  const std::unordered_map<std::string, double>& valences() const { return valence_; }

  static const std::unordered_map<std::string, double>& default_boosters();
  static const std::unordered_set<std::string>& default_negators();

 private:
  std::unordered_map<std::string, double> valence_;
  std::unordered_map<std::string, double> boosters_;
  std::unordered_set<std::string> negators_;
};

// Reads "#sdl-lexicon v1" files: token<TAB>valence lines, '#' comments.
// Entries for booster or negator words are skipped.
SentimentLexicon load_lexicon(std::istream& in);

// Bundled 600-word lexicon.
const SentimentLexicon& mini_lexicon();
const std::string& bundled_mini_lexicon_text();

// Tokens keep their original case; see tokenize_cased.
SentimentScores score_sentiment(const SentimentLexicon& lexicon,
                                std::span<const std::string> tokens);

}  // namespace sdl

#endif  // SDL_SENTIMENT_H_
