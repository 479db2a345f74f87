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

#include "sdl/corpus.h"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>

#include "sdl/error.h"
#include "sdl/random.h"

namespace sdl {
namespace {

constexpr std::string_view kPairsHeader = "#sdl-pairs v1";
constexpr std::string_view kPairsColumns =
    "driver_id\tdriver_ts\tdriver_text\tagent_ts\tagent_text\tresponded_24h\t"
    "first_trip_7d\tdriver_age\tdays_since_signup\tnum_prior_driver_msgs\t"
    "signup_city";
constexpr std::string_view kCorpusHeader = "#sdl-corpus v1";
constexpr std::string_view kCorpusColumns = "driver_id\tspeaker\tts\ttext";
constexpr std::string_view kDriversHeader = "#sdl-drivers v1";
constexpr std::string_view kDriversColumns =
    "driver_id\tage\tsignup_ts\tsignup_city\tfirst_trip_ts";

constexpr int64_t kDay = 86400;

void expect_line(std::istream& in, std::string_view expected, int line_no) {
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("unexpected end of file, expected '" +
                      std::string(expected) + "'");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected) {
    throw FormatError("line " + std::to_string(line_no) + ": expected '" +
                      std::string(expected) + "', got '" + line + "'");
  }
}

bool parse_bool01(std::string_view s) {
  if (s == "0") return false;
  if (s == "1") return true;
  throw FormatError("expected 0/1, got '" + std::string(s) + "'");
}

// Redacted text is stored on disk; redaction is idempotent so re-reading
// reproduces the same tokens.
std::string stored_text(const Utterance& u, const NameList& names) {
  return redact_pii(u.raw_text, names);
}

}  // namespace

const char* speaker_name(Speaker s) {
  return s == Speaker::kDriver ? "driver" : "agent";
}

Speaker parse_speaker(std::string_view s) {
  if (s == "driver") return Speaker::kDriver;
  if (s == "agent") return Speaker::kAgent;
  throw FormatError("unknown speaker '" + std::string(s) + "'");
}

Utterance make_utterance(std::string raw_text, Speaker speaker,
                         int64_t timestamp, const NameList& names) {
  Utterance u;
  u.surface_tokens = tokenize_cased(redact_pii(raw_text, names));
  u.tokens = u.surface_tokens;
  for (auto& t : u.tokens) {
    if (!is_tag(t)) t = to_lower_ascii(t);
  }
  u.raw_text = std::move(raw_text);
  u.speaker = speaker;
  u.timestamp = timestamp;
  return u;
}

Utterance utterance_from_tokens(const Tokens& tokens, Speaker speaker) {
  Utterance u;
  u.raw_text = join(tokens);
  u.tokens = tokens;
  u.surface_tokens = tokens;
  u.speaker = speaker;
  return u;
}

std::vector<MessagePair> pair_messages(const Conversation& conversation,
                                       int64_t window_s) {
  const auto& turns = conversation.turns;
  for (size_t i = 1; i < turns.size(); ++i) {
    if (turns[i].timestamp < turns[i - 1].timestamp) {
      throw OrderingError("conversation " + conversation.driver_id +
                          ": turn " + std::to_string(i) +
                          " is earlier than the turn before it");
    }
  }
  std::vector<MessagePair> pairs;
  const Utterance* pending = nullptr;
  for (const auto& turn : turns) {
    if (turn.speaker == Speaker::kDriver) {
      pending = &turn;
      continue;
    }
    if (pending == nullptr) continue;
    const int64_t gap = turn.timestamp - pending->timestamp;
    if (gap > 0 && gap <= window_s) {
      MessagePair p;
      p.driver_id = conversation.driver_id;
      p.driver_msg = *pending;
      p.agent_msg = turn;
      pairs.push_back(std::move(p));
      pending = nullptr;
    }
  }
  return pairs;
}

uint64_t DatasetSplit::fingerprint() const {
  Fnv1a h;
  for (const auto* part : {&train, &validation, &test}) {
    std::vector<std::string> ids;
    for (const auto& p : *part) ids.push_back(p.driver_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    h.update_u64(part->size());
    for (const auto& id : ids) {
      h.update(id);
      h.update(std::string_view("\0", 1));
    }
    h.update("|");
  }
  return h.digest();
}

DatasetSplit split_dataset(std::span<const MessagePair> pairs,
                           const SplitRatios& ratios, uint64_t seed) {
  const std::array<double, 3> r = {ratios.train, ratios.validation,
                                   ratios.test};
  for (double x : r) {
    if (!(x >= 0.0)) throw PreconditionError("split ratios must be non-negative");
  }
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) {
    throw PreconditionError("split ratios must sum to 1");
  }
  std::map<std::string, std::vector<size_t>> by_driver;
  for (size_t i = 0; i < pairs.size(); ++i) {
    by_driver[pairs[i].driver_id].push_back(i);
  }
  if (by_driver.size() < 3) {
    throw PreconditionError("split needs at least 3 drivers, got " +
                            std::to_string(by_driver.size()));
  }
  std::vector<const std::vector<size_t>*> drivers;
  for (const auto& [id, rows] : by_driver) drivers.push_back(&rows);
  Rng rng(seed);
  rng.shuffle(std::span(drivers));

  const double total = static_cast<double>(pairs.size());
  std::array<double, 3> assigned = {0, 0, 0};
  DatasetSplit split;
  std::array<std::vector<MessagePair>*, 3> parts = {
      &split.train, &split.validation, &split.test};
  for (const auto* rows : drivers) {
    size_t best = 0;
    double best_deficit = -1e300;
    for (size_t k = 0; k < 3; ++k) {
      if (r[k] == 0.0) continue;
      const double deficit = r[k] * total - assigned[k];
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = k;
      }
    }
    for (size_t i : *rows) parts[best]->push_back(pairs[i]);
    assigned[best] += static_cast<double>(rows->size());
  }
  return split;
}

// ---- field helpers ---------------------------------------------------------

std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out.push_back(s[i]);
      continue;
    }
    char n = s[++i];
    switch (n) {
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      default: out.push_back(n);
    }
  }
  return out;
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

int64_t parse_int(std::string_view s) {
  int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("not an integer: '" + std::string(s) + "'");
  }
  return v;
}

// ---- pair file -------------------------------------------------------------

void write_pairs(std::ostream& out, std::span<const MessagePair> pairs) {
  const NameList& names = default_names();
  out << kPairsHeader << '\n' << kPairsColumns << '\n';
  for (const auto& p : pairs) {
    out << escape_field(p.driver_id) << '\t' << p.driver_msg.timestamp << '\t'
        << escape_field(stored_text(p.driver_msg, names)) << '\t'
        << p.agent_msg.timestamp << '\t'
        << escape_field(stored_text(p.agent_msg, names)) << '\t'
        << (p.responded_24h ? 1 : 0) << '\t' << (p.first_trip_7d ? 1 : 0)
        << '\t' << format_double(p.driver_age) << '\t'
        << format_double(p.days_since_signup) << '\t'
        << p.num_prior_driver_msgs << '\t' << escape_field(p.signup_city)
        << '\n';
  }
}

std::vector<MessagePair> read_pairs(std::istream& in, const NameList& names) {
  expect_line(in, kPairsHeader, 1);
  expect_line(in, kPairsColumns, 2);
  std::vector<MessagePair> pairs;
  std::string line;
  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 11) {
      throw FormatError("pairs line " + std::to_string(line_no) +
                        ": expected 11 fields, got " + std::to_string(f.size()));
    }
    MessagePair p;
    p.driver_id = unescape_field(f[0]);
    p.driver_msg = make_utterance(unescape_field(f[2]), Speaker::kDriver,
                                  parse_int(f[1]), names);
    p.agent_msg = make_utterance(unescape_field(f[4]), Speaker::kAgent,
                                 parse_int(f[3]), names);
    p.responded_24h = parse_bool01(f[5]);
    p.first_trip_7d = parse_bool01(f[6]);
    p.driver_age = parse_double(f[7]);
    p.days_since_signup = parse_double(f[8]);
    p.num_prior_driver_msgs = parse_int(f[9]);
    p.signup_city = unescape_field(f[10]);
    const int64_t gap = p.agent_msg.timestamp - p.driver_msg.timestamp;
    if (gap <= 0 || gap > 3600) {
      throw FormatError("pairs line " + std::to_string(line_no) +
                        ": agent reply must follow the driver message "
                        "within (0, 3600] seconds");
    }
    if (p.days_since_signup < 0 || p.num_prior_driver_msgs < 0) {
      throw FormatError("pairs line " + std::to_string(line_no) +
                        ": negative count covariate");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

// ---- conversation file -----------------------------------------------------

void write_conversations(std::ostream& out,
                         std::span<const Conversation> conversations) {
  out << kCorpusHeader << '\n' << kCorpusColumns << '\n';
  for (const auto& c : conversations) {
    for (const auto& t : c.turns) {
      out << escape_field(c.driver_id) << '\t' << speaker_name(t.speaker)
          << '\t' << t.timestamp << '\t' << escape_field(t.raw_text) << '\n';
    }
  }
}

std::vector<Conversation> read_conversations(std::istream& in,
                                             const NameList& names) {
  expect_line(in, kCorpusHeader, 1);
  expect_line(in, kCorpusColumns, 2);
  std::vector<Conversation> out;
  std::unordered_map<std::string, size_t> index;
  std::string line;
  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 4) {
      throw FormatError("corpus line " + std::to_string(line_no) +
                        ": expected 4 fields");
    }
    std::string id = unescape_field(f[0]);
    auto [it, inserted] = index.try_emplace(id, out.size());
    if (inserted) out.push_back(Conversation{id, {}});
    out[it->second].turns.push_back(make_utterance(
        unescape_field(f[3]), parse_speaker(f[1]), parse_int(f[2]), names));
  }
  return out;
}

// ---- driver file -----------------------------------------------------------

void write_drivers(std::ostream& out, std::span<const DriverRecord> drivers) {
  out << kDriversHeader << '\n' << kDriversColumns << '\n';
  for (const auto& d : drivers) {
    out << escape_field(d.driver_id) << '\t' << format_double(d.age) << '\t'
        << d.signup_ts << '\t' << escape_field(d.signup_city) << '\t'
        << d.first_trip_ts << '\n';
  }
}

std::vector<DriverRecord> read_drivers(std::istream& in) {
  expect_line(in, kDriversHeader, 1);
  expect_line(in, kDriversColumns, 2);
  std::vector<DriverRecord> out;
  std::string line;
  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 5) {
      throw FormatError("drivers line " + std::to_string(line_no) +
                        ": expected 5 fields");
    }
    out.push_back(DriverRecord{unescape_field(f[0]), parse_double(f[1]),
                               parse_int(f[2]), unescape_field(f[3]),
                               parse_int(f[4])});
  }
  return out;
}

std::vector<MessagePair> ingest(std::span<const Conversation> conversations,
                                std::span<const DriverRecord> drivers,
                                int64_t window_s) {
  std::unordered_map<std::string, const DriverRecord*> meta;
  for (const auto& d : drivers) meta[d.driver_id] = &d;
  std::vector<MessagePair> out;
  for (const auto& conv : conversations) {
    auto it = meta.find(conv.driver_id);
    if (it == meta.end()) {
      throw FormatError("no driver record for '" + conv.driver_id + "'");
    }
    const DriverRecord& d = *it->second;
    for (auto& p : pair_messages(conv, window_s)) {
      const int64_t t = p.agent_msg.timestamp;
      p.driver_age = d.age;
      p.signup_city = d.signup_city;
      p.days_since_signup =
          std::max<double>(0.0, static_cast<double>(t - d.signup_ts) / kDay);
      p.num_prior_driver_msgs = 0;
      p.responded_24h = false;
      for (const auto& turn : conv.turns) {
        if (turn.speaker != Speaker::kDriver) continue;
        if (turn.timestamp < p.driver_msg.timestamp) ++p.num_prior_driver_msgs;
        if (turn.timestamp > t && turn.timestamp <= t + kDay) {
          p.responded_24h = true;
        }
      }
      p.first_trip_7d = d.first_trip_ts >= t && d.first_trip_ts <= t + 7 * kDay;
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<Conversation> conversations_from_pairs(
    std::span<const MessagePair> pairs) {
  std::vector<Conversation> out;
  std::unordered_map<std::string, size_t> index;
  for (const auto& p : pairs) {
    auto [it, inserted] = index.try_emplace(p.driver_id, out.size());
    if (inserted) out.push_back(Conversation{p.driver_id, {}});
    auto& turns = out[it->second].turns;
    turns.push_back(p.driver_msg);
    turns.push_back(p.agent_msg);
  }
  for (auto& c : out) {
    std::stable_sort(c.turns.begin(), c.turns.end(),
                     [](const Utterance& a, const Utterance& b) {
                       return a.timestamp < b.timestamp;
                     });
  }
  return out;
}

}  // namespace sdl
