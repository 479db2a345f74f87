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

#include "sdl/sentiment.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <sstream>

#include "sdl/error.h"
#include "sdl/text.h"

namespace sdl {

// Booster and negator inventories follow vaderSentiment 3.3.2 (MIT),
// single-word entries only.
const std::unordered_map<std::string, double>& SentimentLexicon::default_boosters() {
  static const auto* kBoosters = [] {
    auto* m = new std::unordered_map<std::string, double>;
    for (const char* w :
         {"absolutely", "amazingly", "awfully", "completely", "considerable",
          "considerably", "decidedly", "deeply", "effing", "enormous",
          "enormously", "entirely", "especially", "exceptional",
          "exceptionally", "extreme", "extremely", "fabulously", "flipping",
          "flippin", "frackin", "fracking", "fricking", "frickin", "frigging",
          "friggin", "fully", "fuckin", "fucking", "fuggin", "fugging",
          "greatly", "hella", "highly", "hugely", "incredible", "incredibly",
          "intensely", "major", "majorly", "more", "most", "particularly",
          "purely", "quite", "really", "remarkably", "so", "substantially",
          "thoroughly", "total", "totally", "tremendous", "tremendously",
          "uber", "unbelievably", "unusually", "utter", "utterly", "very"}) {
      (*m)[w] = kBoosterIncrement;
    }
    for (const char* w :
         {"almost", "barely", "hardly", "kinda", "kindof", "kind-of", "less",
          "little", "marginal", "marginally", "occasional", "occasionally",
          "partly", "scarce", "scarcely", "slight", "slightly", "somewhat",
          "sorta", "sortof", "sort-of"}) {
      (*m)[w] = -kBoosterIncrement;
    }
    return m;
  }();
  return *kBoosters;
}

const std::unordered_set<std::string>& SentimentLexicon::default_negators() {
  static const auto* kNegators = new std::unordered_set<std::string>{
      "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt",
      "doesnt", "ain't", "aren't", "can't", "couldn't", "daren't", "didn't",
      "doesn't", "dont", "hadnt", "hasnt", "havent", "isnt", "mightnt",
      "mustnt", "neither", "don't", "hadn't", "hasn't", "haven't", "isn't",
      "mightn't", "mustn't", "neednt", "needn't", "never", "none", "nope",
      "nor", "not", "nothing", "nowhere", "oughtnt", "shant", "shouldnt",
      "uhuh", "wasnt", "werent", "oughtn't", "shan't", "shouldn't", "uh-uh",
      "wasn't", "weren't", "without", "wont", "wouldnt", "won't", "wouldn't",
      "rarely", "seldom", "despite", "no"};
  return *kNegators;
}

SentimentLexicon::SentimentLexicon()
    : SentimentLexicon({}, default_boosters(), default_negators()) {}

SentimentLexicon::SentimentLexicon(
    std::unordered_map<std::string, double> valence,
    std::unordered_map<std::string, double> boosters,
    std::unordered_set<std::string> negators)
    : valence_(std::move(valence)),
      boosters_(std::move(boosters)),
      negators_(std::move(negators)) {
  for (const auto& [token, v] : valence_) {
    if (!(v >= -4.0 && v <= 4.0)) {
      throw PreconditionError("lexicon valence of '" + token + "' outside [-4, 4]");
    }
    if (boosters_.count(token) || negators_.count(token)) {
      throw PreconditionError("lexicon token '" + token +
                              "' has both a valence and a modifier role");
    }
  }
  for (const auto& [token, inc] : boosters_) {
    if (negators_.count(token)) {
      throw PreconditionError("lexicon token '" + token +
                              "' is both a booster and a negator");
    }
  }
}

const double* SentimentLexicon::valence(const std::string& lower_token) const {
  auto it = valence_.find(lower_token);
  return it == valence_.end() ? nullptr : &it->second;
}

double SentimentLexicon::booster(const std::string& lower_token) const {
  auto it = boosters_.find(lower_token);
  return it == boosters_.end() ? 0.0 : it->second;
}

bool SentimentLexicon::is_negator(const std::string& lower_token) const {
  return negators_.count(lower_token) > 0;
}

SentimentLexicon load_lexicon(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("#sdl-lexicon v1", 0) != 0) {
    throw FormatError("lexicon: missing '#sdl-lexicon v1' header");
  }
  const auto& boosters = SentimentLexicon::default_boosters();
  const auto& negators = SentimentLexicon::default_negators();
  std::unordered_map<std::string, double> valence;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError("lexicon line " + std::to_string(line_no) +
                        ": expected token<TAB>valence");
    }
    const std::string token = to_lower_ascii(line.substr(0, tab));
    const std::string num = line.substr(tab + 1);
    char* end = nullptr;
    const double v = std::strtod(num.c_str(), &end);
    if (end == num.c_str() || *end != '\0') {
      throw FormatError("lexicon line " + std::to_string(line_no) +
                        ": bad valence '" + num + "'");
    }
    if (boosters.count(token) || negators.count(token)) continue;
    valence[token] = v;
  }
  return SentimentLexicon(std::move(valence), boosters, negators);
}

const SentimentLexicon& mini_lexicon() {
  static const SentimentLexicon kLexicon = [] {
    std::istringstream in(bundled_mini_lexicon_text());
    return load_lexicon(in);
  }();
  return kLexicon;
}

namespace {

bool is_all_caps(const std::string& t) {
  bool cased = false;
  for (unsigned char c : t) {
    if (c >= 'a' && c <= 'z') return false;
    if (c >= 'A' && c <= 'Z') cased = true;
  }
  return cased;
}

}  // namespace

SentimentScores score_sentiment(const SentimentLexicon& lexicon,
                                std::span<const std::string> tokens) {
  std::vector<std::string> words;
  std::vector<bool> caps;
  int exclamations = 0;
  for (const auto& t : tokens) {
    if (t == "!") ++exclamations;
    if (t.empty() || is_punctuation(t)) continue;
    caps.push_back(!is_tag(t) && is_all_caps(t));
    words.push_back(is_tag(t) ? t : to_lower_ascii(t));
  }
  if (words.empty()) return {};
  const size_t n_caps = static_cast<size_t>(std::count(caps.begin(), caps.end(), true));
  const bool cap_differential = n_caps > 0 && n_caps < words.size();

  const auto but_it = std::find(words.begin(), words.end(), "but");
  const size_t but_at = static_cast<size_t>(but_it - words.begin());

  double pos = 0.0, neg = 0.0, neu = 0.0;
  for (size_t i = 0; i < words.size(); ++i) {
    const double* base = lexicon.valence(words[i]);
    double v = base ? *base : 0.0;
    if (v != 0.0) {
      if (caps[i] && cap_differential) v += v > 0 ? kCapsIncrement : -kCapsIncrement;
      for (size_t d = 1; d <= 3 && d <= i; ++d) {
        const std::string& prev = words[i - d];
        if (lexicon.valence(prev)) continue;
        double s = lexicon.booster(prev);
        if (s != 0.0) {
          if (v < 0) s = -s;
          if (caps[i - d] && cap_differential) s += v > 0 ? kCapsIncrement : -kCapsIncrement;
          if (d == 2) s *= 0.95;
          if (d == 3) s *= 0.9;
          v += s;
        }
        if (lexicon.is_negator(prev)) v *= kNegationScale;
      }
      if (i > but_at) v *= kButWeight;
    }
    if (v > 0) {
      pos += v + 1.0;
    } else if (v < 0) {
      neg += v - 1.0;
    } else {
      neu += 1.0;
    }
  }
  const double emphasis = std::min(exclamations, kMaxExclamations) * kExclamationIncrement;
  if (pos > std::abs(neg)) {
    pos += emphasis;
  } else if (pos < std::abs(neg)) {
    neg -= emphasis;
  }
  const double total = pos + std::abs(neg) + neu;
  SentimentScores s;
  s.pos = pos / total;
  s.neg = std::abs(neg) / total;
  s.neu = 1.0 - s.pos - s.neg;
  if (s.neu < 0.0) s.neu = 0.0;
  return s;
}

}  // namespace sdl
