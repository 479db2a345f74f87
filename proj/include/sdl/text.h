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

// Rule tokenizer and PII redaction for agent/driver messages.
//
// Tokenizer rules, applied to each whitespace-separated chunk:
//   * `<TAG>` placeholders (ASCII letters/underscore between angle brackets)
//     are emitted as one token, upper-cased.
//   * Runs of word characters (ASCII alphanumerics and any byte >= 0x80)
//     form a word. An apostrophe between two word characters stays inside
//     the word ("don't", "you're").
//   * Every other character is a standalone punctuation token.
//   * Words are lower-cased (ASCII only) unless the cased variant is used.
//
// Redaction replaces PII spans with tags. At each position the rules are
// tried in precedence order DATE > URL > EMAIL > NUMBER > NAME and the
// first that matches wins; scanning then resumes after the match.

#ifndef SDL_TEXT_H_
#define SDL_TEXT_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sdl {

using Tokens = std::vector<std::string>;

// Case-insensitive whole-word name list used by the NAME redaction rule.
class NameList {
 public:
  NameList() = default;
  explicit NameList(std::span<const std::string> names);

  // Length of the name starting at `text[pos]`, or 0. The match must be a
  // whole word.
  size_t match_at(std::string_view text, size_t pos) const;
  bool empty() const { return names_.empty(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;  // lower-cased, longest first
};

// First names used by the synthetic generator; the default redaction list.
const NameList& default_names();

std::string redact_pii(std::string_view text,
                      const NameList& names = default_names());

Tokens tokenize(std::string_view text);
Tokens tokenize_cased(std::string_view text);

std::string to_lower_ascii(std::string_view s);
bool is_tag(std::string_view token);
// True if the token has no word characters and is not a tag.
bool is_punctuation(std::string_view token);
std::string join(std::span<const std::string> tokens, std::string_view sep = " ");

}  // namespace sdl

#endif  // SDL_TEXT_H_
