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

// Content-preservation metrics, the model comparison, the social-language
// enhancement experiment, and the experiment report.

#ifndef SDL_EVAL_H_
#define SDL_EVAL_H_

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdl/corpus.h"
#include "sdl/neural.h"
#include "sdl/social.h"
#include "sdl/stats.h"

namespace sdl::eval {

using Model = neural::Seq2Seq<float>;

// ---- BLEU ----------------------------------------------------------------------

enum class Smoothing { kNone, kAddOne };

struct BleuConfig {
  int max_n = 4;
  // kAddOne replaces a zero match count at some order by 1 / (total + 1).
  Smoothing smoothing = Smoothing::kNone;
};

struct BleuStats {
  std::vector<int64_t> matches;  // clipped n-gram matches, index n - 1
  std::vector<int64_t> totals;   // candidate n-grams
  int64_t candidate_length = 0;
  int64_t reference_length = 0;
};

BleuStats bleu_stats(std::span<const Tokens> candidates, std::span<const Tokens> references,
                     int max_n);

// Corpus BLEU in [0, 100]: geometric mean of the clipped n-gram precisions
// times exp(min(0, 1 - r / c)). Orders for which the candidates contain no
// n-grams at all are left out of the mean.
double bleu(std::span<const Tokens> candidates, std::span<const Tokens> references,
            const BleuConfig& config = {});

// ---- embedding similarity ------------------------------------------------------

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(size_t dim) : dim_(dim) {}

  // Throws PreconditionError on a dimension mismatch or a non-finite entry.
  void add(const std::string& token, std::vector<double> vector);
  const std::vector<double>* find(const std::string& token) const;
  size_t dim() const { return dim_; }
  size_t size() const { return vectors_.size(); }
  const std::map<std::string, std::vector<double>>& vectors() const { return vectors_; }

 private:
  size_t dim_ = 0;
  std::map<std::string, std::vector<double>> vectors_;
};

// Text format: a "count dim" header line, then "token v1 ... vdim" lines.
EmbeddingTable read_embeddings(std::istream& in);
void write_embeddings(std::ostream& out, const EmbeddingTable& table);

// The model's input embeddings for every non-reserved vocabulary entry.
EmbeddingTable embeddings_from_model(const Model& model);

// Cosine of the mean in-table token vectors. Tokens missing from the table
// are skipped; throws DegenerateError when a side has no in-table token or
// a zero mean vector.
double embedding_similarity(const Tokens& candidate, const Tokens& reference,
                            const EmbeddingTable& table);

// ---- model comparison ----------------------------------------------------------

struct TrainedModel {
  Model model;
  neural::CheckpointInfo info;
};

struct GenerationOptions {
  neural::GenerateOptions decode;
  size_t max_source_tokens = 48;
};

Tokens generate_reply(const Model& model, const Tokens& prompt,
                      const std::optional<SocialVector>& social,
                      const GenerationOptions& options = {});

// Ground-truth social vectors of the test replies.
std::vector<SocialVector> reference_social_vectors(std::span<const MessagePair> pairs,
                                                   const SocialScorer& scorer);

struct ComparisonReport {
  size_t n_pairs = 0;
  size_t similarity_pairs = 0;     // pairs with both similarities defined
  size_t similarity_excluded = 0;  // pairs dropped for undefined similarity
  double bleu_lexical = 0.0;
  double bleu_social = 0.0;
  double bleu_gain = 0.0;  // social / lexical - 1
  double similarity_lexical = 0.0;
  double similarity_social = 0.0;
  double similarity_gain = 0.0;
  stats::TestResult similarity_test;  // paired t, social vs lexical
  std::vector<Tokens> lexical_outputs;
  std::vector<Tokens> social_outputs;
};

struct CompareOptions {
  BleuConfig bleu;
  GenerationOptions generation;
};

// Throws PreconditionError when the models were trained on different splits
// or have the wrong variants.
ComparisonReport compare_models(const TrainedModel& lexical, const TrainedModel& social,
                                std::span<const MessagePair> test_pairs,
                                const SocialScorer& scorer, const EmbeddingTable& table,
                                const CompareOptions& options = {});

// Paired t test that reports t = 0, p = 1 when every difference is zero.
stats::TestResult paired_t_or_null(std::span<const double> a, std::span<const double> b);

// ---- enhancement ---------------------------------------------------------------

struct EnhancementResult {
  SocialFeature feature = SocialFeature::kPoliteness;
  double delta_sd = 1.0;
  double feature_sd = 0.0;  // sample SD of the feature over the test set
  double mean_unenhanced = 0.0;
  double mean_enhanced = 0.0;
  double relative_gain = 0.0;  // mean_enhanced / mean_unenhanced - 1
  stats::TestResult t_test;    // paired, enhanced vs unenhanced
  stats::TestResult welch;     // two-sample alternative
  size_t n = 0;
  std::vector<Tokens> unenhanced_outputs;
  std::vector<Tokens> enhanced_outputs;
};

using ReplyRater = std::function<double(const Utterance&)>;

// Generates each reply with the reference social vector and again with the
// chosen feature raised by delta_sd test-set SDs, then rates both with
// `rate`. Throws DegenerateError when the feature SD is zero.
EnhancementResult run_enhancement_experiment(const Model& model,
                                             std::span<const MessagePair> test_pairs,
                                             std::span<const SocialVector> social,
                                             SocialFeature feature, const ReplyRater& rate,
                                             double delta_sd = 1.0,
                                             const GenerationOptions& options = {});

// Uses the scorer both for the reference vectors and for rating.
EnhancementResult run_enhancement_experiment(const Model& model,
                                             std::span<const MessagePair> test_pairs,
                                             const SocialScorer& scorer,
                                             SocialFeature feature, double delta_sd = 1.0,
                                             const GenerationOptions& options = {});

// ---- report --------------------------------------------------------------------

struct SampleGeneration {
  std::string prompt;
  std::string reference;
  std::string lexical;
  std::string social;
  std::string politeness_enhanced;
  std::string positivity_enhanced;
};

struct ExperimentReport {
  // Response (all), first trip (all), response (no milestones), response
  // (questions only).
  std::vector<stats::RegressionFit> regressions;
  std::vector<std::string> regression_titles;
  std::vector<std::string> regression_rows;
  ComparisonReport content;
  EnhancementResult politeness;
  EnhancementResult positivity;
  std::vector<SampleGeneration> samples;
  nlohmann::json metadata = nlohmann::json::object();
};

std::vector<SampleGeneration> sample_generations(std::span<const MessagePair> test_pairs,
                                                 const ComparisonReport& content,
                                                 const EnhancementResult& politeness,
                                                 const EnhancementResult& positivity,
                                                 size_t count);

std::string format_report_markdown(const ExperimentReport& report);
nlohmann::json report_to_json(const ExperimentReport& report);

}  // namespace sdl::eval

#endif  // SDL_EVAL_H_
