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

// Run configuration, the engagement analysis, and the end-to-end pipeline
// synth -> score -> analyze -> train (lexical, lexical_social) -> evaluate
// -> enhance (politeness, positivity) -> report.

#ifndef SDL_PIPELINE_H_
#define SDL_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdl/corpus.h"
#include "sdl/error.h"
#include "sdl/eval.h"
#include "sdl/neural.h"
#include "sdl/social.h"
#include "sdl/stats.h"
#include "sdl/synthetic.h"

namespace sdl {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Every field has a default; the file form is one "key = value" per line,
// '#' starts a comment. Unknown keys are rejected.
struct RunConfig {
  uint64_t seed = 1;
  std::string output_dir = "sdl_run";

  SyntheticSpec synth = default_synth();
  SplitRatios split;

  int vocab_min_count = 2;
  size_t max_tokens = 48;
  neural::ModelDims dims;
  neural::TrainConfig train = default_train();

  int max_len = 40;
  int beam_width = 1;
  double delta_sd = 1.0;
  int bleu_max_n = 4;
  size_t report_samples = 5;

  static SyntheticSpec default_synth();
  static neural::TrainConfig default_train();

  // Seeds of the individual stages, derived from `seed`.
  uint64_t synth_seed() const { return seed; }
  uint64_t split_seed() const { return seed + 1; }
  uint64_t train_seed() const { return seed + 2; }

  // Throws PreconditionError naming the offending key.
  void validate() const;

  std::string to_text() const;
  static RunConfig from_text(std::string_view text);
  // Applies one "key=value" assignment; throws FormatError on unknown keys
  // or malformed values.
  void set(std::string_view key, std::string_view value);
  static std::vector<std::string> keys();
  // FNV-1a over every key except output_dir, so runs of one experiment in
  // different directories share a hash.
  uint64_t hash() const;
};

// Default output root: $SDL_OUTPUT_ROOT when set, else the current directory.
std::filesystem::path default_output_root();

// Per-pair social vectors: "#sdl-social v1", a column line, then
// driver_id, politeness, positivity per line in pair order.
void write_social_scores(std::ostream& out, std::span<const MessagePair> pairs,
                         std::span<const SocialVector> social);
std::vector<SocialVector> read_social_scores(std::istream& in);

std::vector<SocialVector> score_pairs(std::span<const MessagePair> pairs,
                                      const SocialScorer& scorer);

// ---- engagement analysis ---------------------------------------------------------

// Columns: the engagement covariates (standardized; days and message counts
// log-standardized), responded_24h, first_trip_7d, and one indicator per
// signup city except the first in byte order ("city:<name>").
stats::FeatureTable engagement_table(std::span<const MessagePair> pairs,
                                     std::span<const SocialVector> social);

enum class PairSubset { kAll, kNoMilestone, kQuestionsOnly };
const char* pair_subset_name(PairSubset s);
PairSubset parse_pair_subset(std::string_view name);

stats::RegressionFit fit_engagement(const stats::FeatureTable& table,
                                    std::span<const MessagePair> pairs,
                                    const std::string& dependent, PairSubset subset);

struct EngagementAnalysis {
  std::vector<stats::RegressionFit> fits;
  std::vector<std::string> titles;
  std::vector<std::string> rows;
};

// Model 1 for both outcomes, then the response model without milestone
// replies and on question replies only.
EngagementAnalysis analyze_engagement(std::span<const MessagePair> pairs,
                                      std::span<const SocialVector> social);

// ---- training --------------------------------------------------------------------

struct TrainingData {
  neural::Vocab vocab;
  std::vector<neural::Example> train;
  std::vector<neural::Example> validation;
  uint64_t split_fingerprint = 0;
};

// The vocabulary comes from the training part only. Social vectors are the
// scorer's ratings of the reference replies.
TrainingData prepare_training_data(const DatasetSplit& split, const SocialScorer& scorer,
                                   int min_count, size_t max_tokens);

eval::TrainedModel train_variant(neural::Variant variant, const TrainingData& data,
                                 const neural::ModelDims& dims,
                                 const neural::TrainConfig& config,
                                 const std::function<void(const neural::EpochLog&)>& log = {});

void save_trained_model(const std::filesystem::path& path, const eval::TrainedModel& m);
eval::TrainedModel load_trained_model(const std::filesystem::path& path);

// ---- report assembly ---------------------------------------------------------------

eval::GenerationOptions generation_options(const RunConfig& config);

nlohmann::json report_metadata(const RunConfig& config, std::span<const MessagePair> pairs,
                               const DatasetSplit& split, size_t vocab_size);

eval::ExperimentReport make_report(const EngagementAnalysis& analysis,
                                   const eval::ComparisonReport& content,
                                   const eval::EnhancementResult& politeness,
                                   const eval::EnhancementResult& positivity,
                                   std::span<const MessagePair> test_pairs, size_t samples,
                                   nlohmann::json metadata);

// Writes report.md and report.json into dir.
void write_report(const std::filesystem::path& dir, const eval::ExperimentReport& report);

// ---- pipeline --------------------------------------------------------------------

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error("stage '" + stage + "' failed: " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct RunManifest {
  std::string command;
  uint64_t config_hash = 0;
  std::string toolkit_version = kToolkitVersion;
  std::map<std::string, uint64_t> inputs;   // file -> FNV-1a
  std::map<std::string, uint64_t> outputs;  // file -> FNV-1a, logs excluded
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
};

uint64_t file_fingerprint(const std::filesystem::path& path);

// Writes path atomically (temporary file then rename).
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

using ProgressFn = std::function<void(const std::string&)>;

// Runs every stage into config.output_dir. On failure a FAILED marker naming
// the stage is written, partial outputs are kept, and StageError is thrown.
RunManifest run_pipeline(const RunConfig& config, const ProgressFn& progress = {});

}  // namespace sdl

#endif  // SDL_PIPELINE_H_
