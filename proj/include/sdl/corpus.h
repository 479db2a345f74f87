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

// Conversation data model: utterances, driver/agent message pairs, and the
// driver-disjoint train/validation/test split.

#ifndef SDL_CORPUS_H_
#define SDL_CORPUS_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sdl/text.h"

namespace sdl {

enum class Speaker { kDriver, kAgent };

const char* speaker_name(Speaker s);
Speaker parse_speaker(std::string_view s);

struct Utterance {
  std::string raw_text;
  Tokens tokens;          // tokenize(redact_pii(raw_text))
  Tokens surface_tokens;  // same segmentation, original case
  Speaker speaker = Speaker::kDriver;
  int64_t timestamp = 0;  // seconds since epoch
};

Utterance make_utterance(std::string raw_text, Speaker speaker,
                         int64_t timestamp,
                         const NameList& names = default_names());

// Utterance built from already-tokenized text (e.g. model output).
Utterance utterance_from_tokens(const Tokens& tokens, Speaker speaker);

struct MessagePair {
  std::string driver_id;
  Utterance driver_msg;
  Utterance agent_msg;
  bool responded_24h = false;
  bool first_trip_7d = false;
  double driver_age = 0.0;
  double days_since_signup = 0.0;
  int64_t num_prior_driver_msgs = 0;
  std::string signup_city;
};

struct Conversation {
  std::string driver_id;
  std::vector<Utterance> turns;  // time-ordered
};

// Pairs each driver turn with the first later agent turn that arrives
// within (0, window_s] seconds. When several driver turns precede one agent
// turn, the nearest one is used. Agent turns are used at most once; the
// covariate and outcome fields of the result are left at their defaults.
std::vector<MessagePair> pair_messages(const Conversation& conversation,
                                       int64_t window_s = 3600);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  std::vector<MessagePair> train;
  std::vector<MessagePair> validation;
  std::vector<MessagePair> test;

  // Hash of the driver-id membership of each part.
  uint64_t fingerprint() const;
};

// Drivers are shuffled with a seeded RNG and assigned one at a time to the
// part with the largest remaining pair deficit. A zero ratio leaves its part
// empty.
DatasetSplit split_dataset(std::span<const MessagePair> pairs,
                           const SplitRatios& ratios, uint64_t seed);

// ---- files -----------------------------------------------------------------
//
// All files are UTF-8 text: a version header line, a column-name line, then
// tab-separated records. Text fields escape '\\', '\t' and '\n' as "\\\\",
// "\\t" and "\\n".

struct DriverRecord {
  std::string driver_id;
  double age = 0.0;
  int64_t signup_ts = 0;
  std::string signup_city;
  int64_t first_trip_ts = -1;  // -1 when no trip was taken
};

void write_pairs(std::ostream& out, std::span<const MessagePair> pairs);
std::vector<MessagePair> read_pairs(std::istream& in,
                                    const NameList& names = default_names());

void write_conversations(std::ostream& out,
                         std::span<const Conversation> conversations);
std::vector<Conversation> read_conversations(
    std::istream& in, const NameList& names = default_names());

void write_drivers(std::ostream& out, std::span<const DriverRecord> drivers);
std::vector<DriverRecord> read_drivers(std::istream& in);

// Builds message pairs from raw conversations and per-driver metadata.
// Outcomes are derived from the timeline: responded_24h is set when the
// driver writes again within 24 hours of the agent reply; first_trip_7d
// when the first trip happens within 7 days of it.
std::vector<MessagePair> ingest(std::span<const Conversation> conversations,
                                std::span<const DriverRecord> drivers,
                                int64_t window_s = 3600);

// Timeline view of message pairs, one conversation per driver.
std::vector<Conversation> conversations_from_pairs(
    std::span<const MessagePair> pairs);

std::string escape_field(std::string_view s);
std::string unescape_field(std::string_view s);
std::vector<std::string> split_tabs(std::string_view line);
std::string format_double(double v);
double parse_double(std::string_view s);
int64_t parse_int(std::string_view s);

}  // namespace sdl

#endif  // SDL_CORPUS_H_
