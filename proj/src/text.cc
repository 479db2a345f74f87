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

#include "sdl/text.h"

#include <algorithm>
#include <array>
#include <cctype>

namespace sdl {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_alnum(char c) { return is_digit(c) || is_alpha(c); }
bool is_word_char(char c) {
  return is_alnum(c) || static_cast<unsigned char>(c) >= 0x80;
}
bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}
char lower(char c) { return (c >= 'A' && c <= 'Z') ? char(c - 'A' + 'a') : c; }

bool at_word_start(std::string_view s, size_t pos) {
  return pos == 0 || !is_word_char(s[pos - 1]);
}
bool at_word_end(std::string_view s, size_t end) {
  return end >= s.size() || !is_word_char(s[end]);
}

size_t count_digits(std::string_view s, size_t pos, size_t max_len) {
  size_t n = 0;
  while (pos + n < s.size() && n < max_len && is_digit(s[pos + n])) ++n;
  return n;
}

// ---- DATE ----------------------------------------------------------------

constexpr std::array<std::string_view, 23> kMonths = {
    "january", "february", "march",   "april",    "june",    "july",
    "august",  "september", "october", "november", "december", "jan",
    "feb",     "mar",       "apr",     "may",      "jun",      "jul",
    "aug",     "sep",       "sept",    "oct",      "nov"};

bool ieq_prefix(std::string_view s, size_t pos, std::string_view word) {
  if (pos + word.size() > s.size()) return false;
  for (size_t i = 0; i < word.size(); ++i) {
    if (lower(s[pos + i]) != word[i]) return false;
  }
  return true;
}

// d{1,2}[/-]d{1,2}([/-]d{2,4})?  or  d{4}-d{2}-d{2}
size_t match_numeric_date(std::string_view s, size_t pos) {
  if (!at_word_start(s, pos)) return 0;
  size_t y = count_digits(s, pos, 5);
  if (y == 4 && pos + 4 < s.size() && s[pos + 4] == '-') {
    size_t p = pos + 5;
    if (count_digits(s, p, 3) == 2 && p + 2 < s.size() && s[p + 2] == '-') {
      p += 3;
      if (count_digits(s, p, 3) == 2 && (p + 2 >= s.size() || !is_digit(s[p + 2]))) {
        return p + 2 - pos;
      }
    }
  }
  size_t a = count_digits(s, pos, 3);
  if (a < 1 || a > 2) return 0;
  size_t p = pos + a;
  if (p >= s.size() || (s[p] != '/' && s[p] != '-')) return 0;
  char sep = s[p];
  ++p;
  size_t b = count_digits(s, p, 3);
  if (b < 1 || b > 2) return 0;
  p += b;
  if (p < s.size() && s[p] == sep) {
    size_t c = count_digits(s, p + 1, 5);
    if (c >= 2 && c <= 4) return p + 1 + c - pos;
  }
  if (p < s.size() && is_digit(s[p])) return 0;
  return p - pos;
}

// Month-name dates: "Jan 5", "January 5th", "March 3, 2019".
size_t match_month_date(std::string_view s, size_t pos) {
  if (!at_word_start(s, pos)) return 0;
  for (std::string_view m : kMonths) {
    if (!ieq_prefix(s, pos, m)) continue;
    size_t p = pos + m.size();
    if (p < s.size() && s[p] == '.') ++p;
    if (p >= s.size() || s[p] != ' ') continue;
    ++p;
    size_t d = count_digits(s, p, 3);
    if (d < 1 || d > 2) continue;
    p += d;
    for (std::string_view suf : {"st", "nd", "rd", "th"}) {
      if (ieq_prefix(s, p, suf)) {
        p += 2;
        break;
      }
    }
    if (!at_word_end(s, p)) continue;
    if (p + 2 < s.size() && s[p] == ',' && s[p + 1] == ' ' &&
        count_digits(s, p + 2, 5) == 4) {
      p += 6;
    }
    return p - pos;
  }
  return 0;
}

size_t match_date(std::string_view s, size_t pos) {
  return std::max(match_numeric_date(s, pos), match_month_date(s, pos));
}

// ---- URL -----------------------------------------------------------------

bool is_url_char(char c) {
  return !is_space(c) && c != '<' && c != '>' && c != '"';
}

size_t trim_url_tail(std::string_view s, size_t pos, size_t end) {
  while (end > pos) {
    char c = s[end - 1];
    if (c == '.' || c == ',' || c == '!' || c == '?' || c == ';' ||
        c == ':' || c == ')' || c == '\'') {
      --end;
    } else {
      break;
    }
  }
  return end - pos;
}

constexpr std::array<std::string_view, 8> kTlds = {
    ".com", ".org", ".net", ".io", ".co", ".edu", ".gov", ".us"};

size_t match_url(std::string_view s, size_t pos) {
  if (!at_word_start(s, pos)) return 0;
  size_t p = pos;
  bool prefixed = false;
  for (std::string_view pre : {"https://", "http://", "www."}) {
    if (ieq_prefix(s, pos, pre)) {
      p = pos + pre.size();
      prefixed = true;
      break;
    }
  }
  if (prefixed) {
    size_t end = p;
    while (end < s.size() && is_url_char(s[end])) ++end;
    size_t len = trim_url_tail(s, pos, end);
    return len > (p - pos) ? len : 0;
  }
  // Bare domain: label(.label)*.tld(/path)?
  size_t end = pos;
  while (end < s.size() &&
         (is_alnum(s[end]) || s[end] == '-' || s[end] == '.')) {
    ++end;
  }
  std::string_view host = s.substr(pos, end - pos);
  while (!host.empty() && host.back() == '.') host.remove_suffix(1);
  bool has_tld = false;
  for (std::string_view tld : kTlds) {
    if (host.size() > tld.size() &&
        to_lower_ascii(host.substr(host.size() - tld.size())) == tld &&
        is_alnum(host[host.size() - tld.size() - 1])) {
      has_tld = true;
      break;
    }
  }
  if (!has_tld) return 0;
  size_t host_end = pos + host.size();
  if (host_end < s.size() && (s[host_end] == '@' || is_word_char(s[host_end]))) {
    return 0;
  }
  if (host_end < s.size() && s[host_end] == '/') {
    size_t e = host_end;
    while (e < s.size() && is_url_char(s[e])) ++e;
    return trim_url_tail(s, pos, e);
  }
  return host.size();
}

// ---- EMAIL ---------------------------------------------------------------

bool is_local_char(char c) {
  return is_alnum(c) || c == '.' || c == '_' || c == '+' || c == '-';
}

size_t match_email(std::string_view s, size_t pos) {
  if (pos > 0 && is_local_char(s[pos - 1])) return 0;
  size_t p = pos;
  while (p < s.size() && is_local_char(s[p])) ++p;
  if (p == pos || p >= s.size() || s[p] != '@') return 0;
  ++p;
  size_t dom = p;
  size_t last_dot = std::string_view::npos;
  while (p < s.size() && (is_alnum(s[p]) || s[p] == '-' || s[p] == '.')) {
    if (s[p] == '.') last_dot = p;
    ++p;
  }
  while (p > dom && s[p - 1] == '.') {
    --p;
    last_dot = s.substr(dom, p - dom).rfind('.');
    if (last_dot != std::string_view::npos) last_dot += dom;
  }
  if (last_dot == std::string_view::npos || last_dot <= dom || last_dot + 1 >= p) {
    return 0;
  }
  return p - pos;
}

// ---- NUMBER --------------------------------------------------------------

size_t match_number(std::string_view s, size_t pos) {
  size_t n = count_digits(s, pos, std::string_view::npos);
  if (n == 0) return 0;
  size_t p = pos + n;
  while (p + 1 < s.size() && (s[p] == '.' || s[p] == ',') && is_digit(s[p + 1])) {
    p += 1 + count_digits(s, p + 1, std::string_view::npos);
  }
  return p - pos;
}

constexpr std::array<std::string_view, 5> kTagNames = {"<DATE>", "<URL>",
                                                       "<EMAIL>", "<NUMBER>",
                                                       "<NAME>"};

size_t match_tag(std::string_view s, size_t pos) {
  if (s[pos] != '<') return 0;
  size_t p = pos + 1;
  while (p < s.size() && (is_alpha(s[p]) || s[p] == '_')) ++p;
  if (p == pos + 1 || p >= s.size() || s[p] != '>') return 0;
  return p + 1 - pos;
}

}  // namespace

NameList::NameList(std::span<const std::string> names) {
  for (const auto& n : names) {
    if (!n.empty()) names_.push_back(to_lower_ascii(n));
  }
  std::sort(names_.begin(), names_.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  names_.erase(std::unique(names_.begin(), names_.end()), names_.end());
}

size_t NameList::match_at(std::string_view text, size_t pos) const {
  if (!at_word_start(text, pos)) return 0;
  for (const auto& n : names_) {
    if (ieq_prefix(text, pos, n) && at_word_end(text, pos + n.size())) {
      return n.size();
    }
  }
  return 0;
}

const NameList& default_names() {
  static const NameList names = [] {
    const std::vector<std::string> list = {
        "Alex",  "Jordan", "Taylor", "Morgan", "Casey",  "Riley", "Jamie",
        "Avery", "Quinn",  "Parker", "Dana",   "Robin",  "Maria", "Jose",
        "Wei",   "Priya",  "Omar",   "Elena",  "Darnell", "Keisha", "Hiro",
        "Sofia", "Mateo",  "Aisha",  "Lukas",  "Nadia"};
    return NameList(list);
  }();
  return names;
}

std::string redact_pii(std::string_view text, const NameList& names) {
  std::string out;
  out.reserve(text.size());
  size_t pos = 0;
  while (pos < text.size()) {
    if (size_t t = match_tag(text, pos)) {
      out.append(text.substr(pos, t));
      pos += t;
      continue;
    }
    size_t len = 0;
    std::string_view tag;
    if ((len = match_date(text, pos))) {
      tag = kTagNames[0];
    } else if ((len = match_url(text, pos))) {
      tag = kTagNames[1];
    } else if ((len = match_email(text, pos))) {
      tag = kTagNames[2];
    } else if ((len = match_number(text, pos))) {
      tag = kTagNames[3];
    } else if ((len = names.match_at(text, pos))) {
      tag = kTagNames[4];
    }
    if (len > 0) {
      out.append(tag);
      pos += len;
    } else {
      out.push_back(text[pos]);
      ++pos;
    }
  }
  return out;
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = lower(c);
  return out;
}

bool is_tag(std::string_view token) {
  return token.size() >= 3 && match_tag(token, 0) == token.size();
}

bool is_punctuation(std::string_view token) {
  if (token.empty() || is_tag(token)) return false;
  return std::none_of(token.begin(), token.end(), is_word_char);
}

std::string join(std::span<const std::string> tokens, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.append(sep);
    out.append(tokens[i]);
  }
  return out;
}

Tokens tokenize_cased(std::string_view text) {
  Tokens out;
  size_t pos = 0;
  const size_t n = text.size();
  while (pos < n) {
    char c = text[pos];
    if (is_space(c)) {
      ++pos;
      continue;
    }
    if (size_t t = match_tag(text, pos)) {
      std::string tag(text.substr(pos, t));
      for (char& ch : tag) ch = char(std::toupper(static_cast<unsigned char>(ch)));
      out.push_back(std::move(tag));
      pos += t;
      continue;
    }
    if (is_word_char(c)) {
      size_t end = pos;
      while (end < n) {
        if (is_word_char(text[end])) {
          ++end;
        } else if (text[end] == '\'' && end + 1 < n && is_word_char(text[end + 1])) {
          end += 2;
        } else {
          break;
        }
      }
      out.emplace_back(text.substr(pos, end - pos));
      pos = end;
      continue;
    }
    out.emplace_back(1, c);
    ++pos;
  }
  return out;
}

Tokens tokenize(std::string_view text) {
  Tokens out = tokenize_cased(text);
  for (auto& t : out) {
    if (!is_tag(t)) t = to_lower_ascii(t);
  }
  return out;
}

}  // namespace sdl
