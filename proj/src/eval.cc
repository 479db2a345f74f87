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

#include "sdl/eval.h"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "sdl/error.h"

namespace sdl::eval {

namespace {

std::string fmt(const char* format, ...) {
  char buf[256];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

double relative_gain(double value, double base) {
  if (base == 0.0) return value == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return value / base - 1.0;
}

double mean_or_zero(const std::vector<double>& x) {
  return x.empty() ? 0.0 : stats::mean(x);
}

}  // namespace

// ---- BLEU ----------------------------------------------------------------------

BleuStats bleu_stats(std::span<const Tokens> candidates, std::span<const Tokens> references,
                     int max_n) {
  if (max_n < 1) throw PreconditionError("bleu: max_n must be >= 1");
  if (candidates.size() != references.size()) {
    throw PreconditionError("bleu: candidate and reference corpora differ in length");
  }
  BleuStats s;
  s.matches.assign(static_cast<size_t>(max_n), 0);
  s.totals.assign(static_cast<size_t>(max_n), 0);
  for (size_t i = 0; i < candidates.size(); ++i) {
    const Tokens& cand = candidates[i];
    const Tokens& ref = references[i];
    s.candidate_length += static_cast<int64_t>(cand.size());
    s.reference_length += static_cast<int64_t>(ref.size());
    for (int n = 1; n <= max_n; ++n) {
      if (cand.size() < static_cast<size_t>(n)) break;
      std::map<std::vector<std::string>, int64_t> cand_counts, ref_counts;
      for (size_t k = 0; k + n <= cand.size(); ++k) {
        ++cand_counts[Tokens(cand.begin() + k, cand.begin() + k + n)];
      }
      for (size_t k = 0; k + n <= ref.size(); ++k) {
        ++ref_counts[Tokens(ref.begin() + k, ref.begin() + k + n)];
      }
      for (const auto& [gram, c] : cand_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) s.matches[n - 1] += std::min(c, it->second);
      }
      s.totals[n - 1] += static_cast<int64_t>(cand.size() - n + 1);
    }
  }
  return s;
}

double bleu(std::span<const Tokens> candidates, std::span<const Tokens> references,
            const BleuConfig& config) {
  if (candidates.empty()) throw PreconditionError("bleu: empty candidate corpus");
  const BleuStats s = bleu_stats(candidates, references, config.max_n);
  if (s.candidate_length == 0) return 0.0;
  double log_sum = 0.0;
  int orders = 0;
  for (int n = 0; n < config.max_n; ++n) {
    if (s.totals[n] == 0) continue;
    double p;
    if (s.matches[n] == 0) {
      if (config.smoothing == Smoothing::kNone) return 0.0;
      p = 1.0 / static_cast<double>(s.totals[n] + 1);
    } else {
      p = static_cast<double>(s.matches[n]) / static_cast<double>(s.totals[n]);
    }
    log_sum += std::log(p);
    ++orders;
  }
  const double ratio =
      static_cast<double>(s.reference_length) / static_cast<double>(s.candidate_length);
  const double bp = std::exp(std::min(0.0, 1.0 - ratio));
  return 100.0 * bp * std::exp(log_sum / orders);
}

// ---- embeddings ----------------------------------------------------------------

void EmbeddingTable::add(const std::string& token, std::vector<double> vector) {
  if (dim_ == 0) dim_ = vector.size();
  if (vector.size() != dim_ || dim_ == 0) {
    throw PreconditionError("embedding for '" + token + "' has dimension " +
                            std::to_string(vector.size()) + ", expected " +
                            std::to_string(dim_));
  }
  for (double v : vector) {
    if (!std::isfinite(v)) throw PreconditionError("embedding for '" + token + "' is not finite");
  }
  vectors_[token] = std::move(vector);
}

const std::vector<double>* EmbeddingTable::find(const std::string& token) const {
  auto it = vectors_.find(token);
  return it == vectors_.end() ? nullptr : &it->second;
}

EmbeddingTable read_embeddings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("embeddings: missing header line");
  std::istringstream header(line);
  size_t count = 0, dim = 0;
  if (!(header >> count >> dim) || dim == 0) {
    throw FormatError("embeddings: header must be 'count dim'");
  }
  EmbeddingTable table(dim);
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> v;
    std::string x;
    while (fields >> x) {
      try {
        v.push_back(parse_double(x));
      } catch (const Error&) {
        throw FormatError("embeddings line " + std::to_string(line_no) + ": bad number '" + x +
                          "'");
      }
    }
    if (v.size() != dim) {
      throw FormatError("embeddings line " + std::to_string(line_no) + ": expected " +
                        std::to_string(dim) + " values, found " + std::to_string(v.size()));
    }
    table.add(token, std::move(v));
  }
  if (table.size() != count) {
    throw FormatError("embeddings: header declares " + std::to_string(count) +
                      " vectors, file has " + std::to_string(table.size()));
  }
  return table;
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out << table.size() << ' ' << table.dim() << '\n';
  for (const auto& [token, v] : table.vectors()) {
    out << token;
    for (double x : v) out << ' ' << format_double(x);
    out << '\n';
  }
}

EmbeddingTable embeddings_from_model(const Model& model) {
  const auto& emb = model.param(neural::kEmbedding);
  EmbeddingTable table(static_cast<size_t>(emb.rows()));
  for (int32_t id = neural::Vocab::kNumReserved; id < model.vocab_size(); ++id) {
    std::vector<double> v(static_cast<size_t>(emb.rows()));
    for (Eigen::Index r = 0; r < emb.rows(); ++r) v[r] = static_cast<double>(emb(r, id));
    table.add(model.vocab().token(id), std::move(v));
  }
  return table;
}

namespace {

// Mean of the in-table vectors, or empty when no token is in the table.
std::vector<double> mean_vector(const Tokens& tokens, const EmbeddingTable& table) {
  std::vector<double> sum(table.dim(), 0.0);
  size_t n = 0;
  for (const auto& t : tokens) {
    const auto* v = table.find(t);
    if (!v) continue;
    for (size_t k = 0; k < sum.size(); ++k) sum[k] += (*v)[k];
    ++n;
  }
  if (n == 0) return {};
  for (double& x : sum) x /= static_cast<double>(n);
  return sum;
}

}  // namespace

double embedding_similarity(const Tokens& candidate, const Tokens& reference,
                            const EmbeddingTable& table) {
  const auto a = mean_vector(candidate, table);
  const auto b = mean_vector(reference, table);
  if (a.empty() || b.empty()) {
    throw DegenerateError("similarity undefined: " +
                          std::string(a.empty() ? "candidate" : "reference") +
                          " has no token in the embedding table");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) throw DegenerateError("similarity undefined: zero mean vector");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

// ---- comparison ----------------------------------------------------------------

Tokens generate_reply(const Model& model, const Tokens& prompt,
                      const std::optional<SocialVector>& social,
                      const GenerationOptions& options) {
  const auto ex =
      neural::make_example(model.vocab(), prompt, {}, {}, options.max_source_tokens);
  return model.vocab().decode(neural::generate(model, ex.source, social, options.decode));
}

std::vector<SocialVector> reference_social_vectors(std::span<const MessagePair> pairs,
                                                   const SocialScorer& scorer) {
  std::vector<SocialVector> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(scorer.score(p.agent_msg));
  return out;
}

stats::TestResult paired_t_or_null(std::span<const double> a, std::span<const double> b) {
  try {
    return stats::paired_t_test(a, b);
  } catch (const DegenerateError&) {
    stats::TestResult r;
    r.kind = stats::TestKind::kPairedT;
    r.statistic = 0.0;
    r.df = static_cast<double>(a.size()) - 1.0;
    r.p_value = 1.0;
    return r;
  }
}

ComparisonReport compare_models(const TrainedModel& lexical, const TrainedModel& social,
                                std::span<const MessagePair> test_pairs,
                                const SocialScorer& scorer, const EmbeddingTable& table,
                                const CompareOptions& options) {
  if (lexical.model.variant() != neural::Variant::kLexical ||
      social.model.variant() != neural::Variant::kLexicalSocial) {
    throw PreconditionError("compare_models: expected a lexical and a lexical_social model");
  }
  if (lexical.info.split_fingerprint != social.info.split_fingerprint) {
    throw PreconditionError(fmt("compare_models: models were trained on different splits "
                                "(%016llx vs %016llx)",
                                static_cast<unsigned long long>(lexical.info.split_fingerprint),
                                static_cast<unsigned long long>(social.info.split_fingerprint)));
  }
  if (test_pairs.empty()) throw PreconditionError("compare_models: empty test set");

  const auto vectors = reference_social_vectors(test_pairs, scorer);
  ComparisonReport r;
  r.n_pairs = test_pairs.size();
  std::vector<Tokens> refs;
  for (size_t i = 0; i < test_pairs.size(); ++i) {
    const Tokens& prompt = test_pairs[i].driver_msg.tokens;
    r.lexical_outputs.push_back(
        generate_reply(lexical.model, prompt, std::nullopt, options.generation));
    r.social_outputs.push_back(
        generate_reply(social.model, prompt, vectors[i], options.generation));
    refs.push_back(test_pairs[i].agent_msg.tokens);
  }
  r.bleu_lexical = bleu(r.lexical_outputs, refs, options.bleu);
  r.bleu_social = bleu(r.social_outputs, refs, options.bleu);
  r.bleu_gain = relative_gain(r.bleu_social, r.bleu_lexical);

  std::vector<double> sim_lex, sim_soc;
  for (size_t i = 0; i < refs.size(); ++i) {
    try {
      const double a = embedding_similarity(r.lexical_outputs[i], refs[i], table);
      const double b = embedding_similarity(r.social_outputs[i], refs[i], table);
      sim_lex.push_back(a);
      sim_soc.push_back(b);
    } catch (const DegenerateError&) {
      ++r.similarity_excluded;
    }
  }
  r.similarity_pairs = sim_lex.size();
  r.similarity_lexical = mean_or_zero(sim_lex);
  r.similarity_social = mean_or_zero(sim_soc);
  r.similarity_gain = relative_gain(r.similarity_social, r.similarity_lexical);
  if (sim_lex.size() >= 2) {
    r.similarity_test = paired_t_or_null(sim_soc, sim_lex);
  } else {
    r.similarity_test.statistic = 0.0;
    r.similarity_test.p_value = 1.0;
  }
  return r;
}

// ---- enhancement ---------------------------------------------------------------

EnhancementResult run_enhancement_experiment(const Model& model,
                                             std::span<const MessagePair> test_pairs,
                                             std::span<const SocialVector> social,
                                             SocialFeature feature, const ReplyRater& rate,
                                             double delta_sd,
                                             const GenerationOptions& options) {
  if (model.variant() != neural::Variant::kLexicalSocial) {
    throw PreconditionError("enhancement needs a lexical_social model");
  }
  if (test_pairs.size() != social.size()) {
    throw PreconditionError("enhancement: one social vector per test pair is required");
  }
  if (test_pairs.size() < 2) throw PreconditionError("enhancement: need at least 2 test pairs");
  if (!std::isfinite(delta_sd)) throw PreconditionError("enhancement: delta_sd must be finite");

  auto component = [feature](SocialVector& s) -> double& {
    return feature == SocialFeature::kPoliteness ? s.politeness : s.positivity;
  };
  std::vector<double> values;
  for (SocialVector s : social) values.push_back(component(s));
  EnhancementResult r;
  r.feature = feature;
  r.delta_sd = delta_sd;
  r.n = test_pairs.size();
  r.feature_sd = stats::sample_sd(values);
  if (!(r.feature_sd > 0.0)) {
    throw DegenerateError(std::string("enhancement: feature '") + social_feature_name(feature) +
                          "' has zero standard deviation on the test set");
  }
  const double shift = delta_sd * r.feature_sd;
  std::vector<double> before, after;
  for (size_t i = 0; i < test_pairs.size(); ++i) {
    const Tokens& prompt = test_pairs[i].driver_msg.tokens;
    SocialVector s = social[i];
    r.unenhanced_outputs.push_back(generate_reply(model, prompt, s, options));
    component(s) += shift;
    r.enhanced_outputs.push_back(generate_reply(model, prompt, s, options));
    before.push_back(rate(utterance_from_tokens(r.unenhanced_outputs.back(), Speaker::kAgent)));
    after.push_back(rate(utterance_from_tokens(r.enhanced_outputs.back(), Speaker::kAgent)));
  }
  r.mean_unenhanced = stats::mean(before);
  r.mean_enhanced = stats::mean(after);
  r.relative_gain = relative_gain(r.mean_enhanced, r.mean_unenhanced);
  r.t_test = paired_t_or_null(after, before);
  try {
    r.welch = stats::welch_t_test(after, before);
  } catch (const DegenerateError&) {
    r.welch.kind = stats::TestKind::kWelchT;
    r.welch.statistic = 0.0;
    r.welch.df = 2.0 * static_cast<double>(r.n) - 2.0;
    r.welch.p_value = 1.0;
  }
  return r;
}

EnhancementResult run_enhancement_experiment(const Model& model,
                                             std::span<const MessagePair> test_pairs,
                                             const SocialScorer& scorer,
                                             SocialFeature feature, double delta_sd,
                                             const GenerationOptions& options) {
  const auto vectors = reference_social_vectors(test_pairs, scorer);
  return run_enhancement_experiment(
      model, test_pairs, vectors, feature,
      [&scorer, feature](const Utterance& u) { return scorer.score(u, feature); }, delta_sd,
      options);
}

// ---- report --------------------------------------------------------------------

std::vector<SampleGeneration> sample_generations(std::span<const MessagePair> test_pairs,
                                                 const ComparisonReport& content,
                                                 const EnhancementResult& politeness,
                                                 const EnhancementResult& positivity,
                                                 size_t count) {
  std::vector<SampleGeneration> out;
  const size_t n = std::min({count, test_pairs.size(), content.lexical_outputs.size(),
                             politeness.enhanced_outputs.size(),
                             positivity.enhanced_outputs.size()});
  for (size_t i = 0; i < n; ++i) {
    out.push_back({redact_pii(test_pairs[i].driver_msg.raw_text),
                   redact_pii(test_pairs[i].agent_msg.raw_text),
                   join(content.lexical_outputs[i]), join(content.social_outputs[i]),
                   join(politeness.enhanced_outputs[i]), join(positivity.enhanced_outputs[i])});
  }
  return out;
}

namespace {

std::string gain_text(double gain) {
  if (!std::isfinite(gain)) return "n/a";
  return fmt("%.1f%%", 100.0 * gain);
}

std::string test_text(const stats::TestResult& t) {
  return fmt("p=%.3g, t=%.3f, df=%.1f", t.p_value, t.statistic, t.df);
}

std::string cell(std::string s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += ' ';
    else out += c;
  }
  return out;
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json enhancement_to_json(const EnhancementResult& e) {
  return {{"feature", social_feature_name(e.feature)},
          {"delta_sd", e.delta_sd},
          {"feature_sd", e.feature_sd},
          {"n", e.n},
          {"mean_unenhanced", e.mean_unenhanced},
          {"mean_enhanced", e.mean_enhanced},
          {"relative_gain", finite_or_null(e.relative_gain)},
          {"paired_t", stats::test_to_json(e.t_test)},
          {"welch_t", stats::test_to_json(e.welch)}};
}

}  // namespace

std::string format_report_markdown(const ExperimentReport& report) {
  std::ostringstream out;
  out << "# Social language experiment report\n\n";
  if (!report.metadata.empty()) {
    for (const auto& [key, value] : report.metadata.items()) {
      out << "- " << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump())
          << "\n";
    }
    out << "\n";
  }

  out << "## Table 1. Engagement regressions (random intercept per driver)\n\n```\n";
  out << stats::format_regression_table(report.regressions, report.regression_titles,
                                        report.regression_rows);
  out << "```\n\nSignup-city indicators are fitted as controls and omitted from the table.\n";
  for (size_t i = 0; i < report.regressions.size(); ++i) {
    const auto& f = report.regressions[i];
    out << fmt("- %s: n=%zu, drivers=%zu, driver variance=%.4g, residual variance=%.4g\n",
               i < report.regression_titles.size() ? report.regression_titles[i].c_str()
                                                   : f.dependent.c_str(),
               f.n_obs, f.n_groups, f.random_intercept_variance, f.residual_variance);
  }

  const auto& c = report.content;
  out << "\n## Table 2. Content preservation\n\n";
  out << "| Model | BLEU score | Embedding similarity |\n|---|---|---|\n";
  out << fmt("| Lexical | %.2f | %.3f |\n", c.bleu_lexical, c.similarity_lexical);
  out << fmt("| Lexical + Social | %.2f (%s) | %.3f (%s) |\n", c.bleu_social,
             gain_text(c.bleu_gain).c_str(), c.similarity_social,
             gain_text(c.similarity_gain).c_str());
  out << fmt("\nTest pairs: %zu. Similarity defined for %zu pairs (%zu excluded). "
             "Paired t on similarity: %s.\n",
             c.n_pairs, c.similarity_pairs, c.similarity_excluded,
             test_text(c.similarity_test).c_str());

  const auto& po = report.politeness;
  const auto& ps = report.positivity;
  out << "\n## Table 3. Automatic social-language scores\n\n";
  out << "| Agent response | Avg. politeness score | Avg. positivity score |\n|---|---|---|\n";
  out << fmt("| Unenhanced | %.3f | %.3f |\n", po.mean_unenhanced, ps.mean_unenhanced);
  out << fmt("| Enhanced | %.3f | %.3f |\n", po.mean_enhanced, ps.mean_enhanced);
  out << "| | (" << gain_text(po.relative_gain) << "; " << test_text(po.t_test) << ") | ("
      << gain_text(ps.relative_gain) << "; " << test_text(ps.t_test) << ") |\n";
  out << fmt("\nPaired t tests over %zu test pairs; enhancement adds %.2f test-set SD "
             "(politeness SD %.4f, positivity SD %.4f). Two-sample Welch t: politeness %s; "
             "positivity %s.\n",
             po.n, po.delta_sd, po.feature_sd, ps.feature_sd, test_text(po.welch).c_str(),
             test_text(ps.welch).c_str());

  out << "\n## Table 4. Sample generations\n\n";
  out << "| Driver message | Reference reply | Lexical | Lexical + Social | "
         "Politeness enhanced | Positivity enhanced |\n|---|---|---|---|---|---|\n";
  for (const auto& s : report.samples) {
    out << "| " << cell(s.prompt) << " | " << cell(s.reference) << " | " << cell(s.lexical)
        << " | " << cell(s.social) << " | " << cell(s.politeness_enhanced) << " | "
        << cell(s.positivity_enhanced) << " |\n";
  }
  return out.str();
}

nlohmann::json report_to_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["metadata"] = report.metadata;
  auto& regs = j["regressions"] = nlohmann::json::array();
  for (size_t i = 0; i < report.regressions.size(); ++i) {
    auto r = stats::regression_to_json(report.regressions[i]);
    if (i < report.regression_titles.size()) r["title"] = report.regression_titles[i];
    regs.push_back(std::move(r));
  }
  const auto& c = report.content;
  j["content_preservation"] = {{"n_pairs", c.n_pairs},
                               {"similarity_pairs", c.similarity_pairs},
                               {"similarity_excluded", c.similarity_excluded},
                               {"bleu_lexical", c.bleu_lexical},
                               {"bleu_social", c.bleu_social},
                               {"bleu_gain", finite_or_null(c.bleu_gain)},
                               {"similarity_lexical", c.similarity_lexical},
                               {"similarity_social", c.similarity_social},
                               {"similarity_gain", finite_or_null(c.similarity_gain)},
                               {"similarity_paired_t", stats::test_to_json(c.similarity_test)}};
  j["enhancement"] = {{"politeness", enhancement_to_json(report.politeness)},
                      {"positivity", enhancement_to_json(report.positivity)}};
  auto& samples = j["samples"] = nlohmann::json::array();
  for (const auto& s : report.samples) {
    samples.push_back({{"prompt", s.prompt},
                       {"reference", s.reference},
                       {"lexical", s.lexical},
                       {"social", s.social},
                       {"politeness_enhanced", s.politeness_enhanced},
                       {"positivity_enhanced", s.positivity_enhanced}});
  }
  return j;
}

}  // namespace sdl::eval
