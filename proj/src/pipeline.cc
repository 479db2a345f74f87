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

#include "sdl/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "sdl/politeness.h"
#include "sdl/random.h"
#include "sdl/sentiment.h"

namespace sdl {

namespace fs = std::filesystem;

// ---- run config ------------------------------------------------------------------

SyntheticSpec RunConfig::default_synth() {
  SyntheticSpec s;
  s.n_drivers = 360;
  return s;
}

neural::TrainConfig RunConfig::default_train() {
  neural::TrainConfig t;
  t.learning_rate = 1.0;
  t.batch_size = 8;
  t.max_epochs = 80;
  t.patience = 6;
  return t;
}

namespace {

struct Field {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
Field number_field(const char* key, T RunConfig::*member) {
  return {key,
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          },
          [member](RunConfig& c, std::string_view v) {
            if constexpr (std::is_floating_point_v<T>) {
              c.*member = parse_double(v);
            } else {
              const int64_t x = parse_int(v);
              if (std::is_unsigned_v<T> && x < 0) throw FormatError("negative value");
              c.*member = static_cast<T>(x);
            }
          }};
}

template <typename S, typename T>
Field nested_field(const char* key, S RunConfig::*outer, T S::*member) {
  return {key,
          [outer, member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*outer.*member);
            } else {
              return std::to_string(c.*outer.*member);
            }
          },
          [outer, member](RunConfig& c, std::string_view v) {
            if constexpr (std::is_floating_point_v<T>) {
              c.*outer.*member = parse_double(v);
            } else {
              const int64_t x = parse_int(v);
              if (std::is_unsigned_v<T> && x < 0) throw FormatError("negative value");
              c.*outer.*member = static_cast<T>(x);
            }
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      number_field("seed", &RunConfig::seed),
      {"output_dir", [](const RunConfig& c) { return c.output_dir; },
       [](RunConfig& c, std::string_view v) { c.output_dir = std::string(v); }},
      nested_field("synth.drivers", &RunConfig::synth, &SyntheticSpec::n_drivers),
      nested_field("synth.min_pairs", &RunConfig::synth, &SyntheticSpec::min_pairs_per_driver),
      nested_field("synth.max_pairs", &RunConfig::synth, &SyntheticSpec::max_pairs_per_driver),
      nested_field("synth.politeness_rate", &RunConfig::synth,
                   &SyntheticSpec::politeness_marker_rate),
      nested_field("synth.positivity_rate", &RunConfig::synth,
                   &SyntheticSpec::positivity_marker_rate),
      nested_field("synth.milestone_rate", &RunConfig::synth, &SyntheticSpec::milestone_rate),
      nested_field("synth.driver_effect_sd", &RunConfig::synth,
                   &SyntheticSpec::driver_effect_sd),
      nested_field("synth.cities", &RunConfig::synth, &SyntheticSpec::n_cities),
      nested_field("split.train", &RunConfig::split, &SplitRatios::train),
      nested_field("split.validation", &RunConfig::split, &SplitRatios::validation),
      nested_field("split.test", &RunConfig::split, &SplitRatios::test),
      number_field("vocab.min_count", &RunConfig::vocab_min_count),
      number_field("model.max_tokens", &RunConfig::max_tokens),
      nested_field("model.embedding", &RunConfig::dims, &neural::ModelDims::embedding),
      nested_field("model.hidden", &RunConfig::dims, &neural::ModelDims::hidden),
      nested_field("train.learning_rate", &RunConfig::train, &neural::TrainConfig::learning_rate),
      nested_field("train.batch_size", &RunConfig::train, &neural::TrainConfig::batch_size),
      nested_field("train.max_epochs", &RunConfig::train, &neural::TrainConfig::max_epochs),
      nested_field("train.patience", &RunConfig::train, &neural::TrainConfig::patience),
      nested_field("train.clip_norm", &RunConfig::train, &neural::TrainConfig::clip_norm),
      nested_field("train.init_scale", &RunConfig::train, &neural::TrainConfig::init_scale),
      number_field("generate.max_len", &RunConfig::max_len),
      number_field("generate.beam_width", &RunConfig::beam_width),
      number_field("enhance.delta_sd", &RunConfig::delta_sd),
      number_field("eval.bleu_max_n", &RunConfig::bleu_max_n),
      number_field("report.samples", &RunConfig::report_samples),
  };
  return kFields;
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw PreconditionError("config " + key + ": " + why);
  };
  try {
    synth.validate();
  } catch (const PreconditionError& e) {
    fail("synth", e.what());
  }
  for (auto [key, r] : {std::pair{"split.train", split.train},
                        std::pair{"split.validation", split.validation},
                        std::pair{"split.test", split.test}}) {
    if (!(r >= 0.0 && r <= 1.0)) fail(key, "must be in [0, 1]");
  }
  if (std::abs(split.train + split.validation + split.test - 1.0) > 1e-9) {
    fail("split", "ratios must sum to 1");
  }
  if (vocab_min_count < 1) fail("vocab.min_count", "must be >= 1");
  if (max_tokens < 1) fail("model.max_tokens", "must be >= 1");
  if (dims.embedding < 1) fail("model.embedding", "must be >= 1");
  if (dims.hidden < 1) fail("model.hidden", "must be >= 1");
  try {
    train.validate();
  } catch (const PreconditionError& e) {
    fail("train", e.what());
  }
  if (max_len < 1) fail("generate.max_len", "must be >= 1");
  if (beam_width < 1) fail("generate.beam_width", "must be >= 1");
  if (!std::isfinite(delta_sd)) fail("enhance.delta_sd", "must be finite");
  if (bleu_max_n < 1) fail("eval.bleu_max_n", "must be >= 1");
  if (output_dir.empty()) fail("output_dir", "must not be empty");
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  out << "# sdl run config\n";
  for (const auto& f : fields()) out << f.key << " = " << f.get(*this) << "\n";
  return out.str();
}

void RunConfig::set(std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      try {
        f.set(*this, trim(value));
      } catch (const FormatError& e) {
        throw FormatError("config " + std::string(key) + ": " + e.what());
      }
      return;
    }
  }
  throw FormatError("config: unknown key '" + std::string(key) + "'");
}

RunConfig RunConfig::from_text(std::string_view text) {
  RunConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    c.set(trim(std::string_view(body).substr(0, eq)), std::string_view(body).substr(eq + 1));
  }
  return c;
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.emplace_back(f.key);
  return out;
}

uint64_t RunConfig::hash() const {
  Fnv1a h;
  for (const auto& f : fields()) {
    if (f.key == std::string_view("output_dir")) continue;
    h.update(f.key);
    h.update("=");
    h.update(f.get(*this));
    h.update("\n");
  }
  return h.digest();
}

fs::path default_output_root() {
  if (const char* root = std::getenv("SDL_OUTPUT_ROOT"); root && *root) return root;
  return fs::current_path();
}

// ---- social score file -------------------------------------------------------------

namespace {
constexpr const char* kSocialHeader = "#sdl-social v1";
constexpr const char* kSocialColumns = "driver_id\tpoliteness\tpositivity";
}  // namespace

void write_social_scores(std::ostream& out, std::span<const MessagePair> pairs,
                         std::span<const SocialVector> social) {
  if (pairs.size() != social.size()) {
    throw PreconditionError("write_social_scores: one vector per pair is required");
  }
  out << kSocialHeader << '\n' << kSocialColumns << '\n';
  for (size_t i = 0; i < pairs.size(); ++i) {
    out << escape_field(pairs[i].driver_id) << '\t' << format_double(social[i].politeness)
        << '\t' << format_double(social[i].positivity) << '\n';
  }
}

std::vector<SocialVector> read_social_scores(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSocialHeader) {
    throw FormatError("social scores: missing '" + std::string(kSocialHeader) + "' header");
  }
  if (!std::getline(in, line) || line != kSocialColumns) {
    throw FormatError("social scores: bad column line");
  }
  std::vector<SocialVector> out;
  size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 3) {
      throw FormatError("social scores line " + std::to_string(line_no) + ": expected 3 fields");
    }
    out.push_back({parse_double(f[1]), parse_double(f[2])});
  }
  return out;
}

std::vector<SocialVector> score_pairs(std::span<const MessagePair> pairs,
                                      const SocialScorer& scorer) {
  return eval::reference_social_vectors(pairs, scorer);
}

// ---- engagement analysis ---------------------------------------------------------

stats::FeatureTable engagement_table(std::span<const MessagePair> pairs,
                                     std::span<const SocialVector> social) {
  if (pairs.size() != social.size()) {
    throw PreconditionError("engagement_table: one social vector per pair is required");
  }
  const size_t n = pairs.size();
  std::vector<std::string> groups;
  stats::Column age(n), days(n), prior(n), length(n), polite(n), positive(n), resp(n), trip(n);
  std::set<std::string> cities;
  for (size_t i = 0; i < n; ++i) {
    const auto& p = pairs[i];
    groups.push_back(p.driver_id);
    age[i] = p.driver_age;
    days[i] = p.days_since_signup;
    prior[i] = static_cast<double>(p.num_prior_driver_msgs);
    length[i] = static_cast<double>(p.agent_msg.tokens.size());
    polite[i] = social[i].politeness;
    positive[i] = social[i].positivity;
    resp[i] = p.responded_24h ? 1.0 : 0.0;
    trip[i] = p.first_trip_7d ? 1.0 : 0.0;
    cities.insert(p.signup_city);
  }
  const auto& names = engagement_covariates();
  stats::FeatureTable t(std::move(groups));
  t.set(names[0], stats::standardize(age));
  t.set(names[1], stats::log_standardize(days));
  t.set(names[2], stats::log_standardize(prior));
  t.set(names[3], stats::standardize(length));
  t.set(names[4], stats::standardize(polite));
  t.set(names[5], stats::standardize(positive));
  t.set("responded_24h", std::move(resp));
  t.set("first_trip_7d", std::move(trip));
  bool first = true;
  for (const auto& city : cities) {
    if (first) {
      first = false;
      continue;
    }
    stats::Column d(n);
    for (size_t i = 0; i < n; ++i) d[i] = pairs[i].signup_city == city ? 1.0 : 0.0;
    t.set("city:" + city, std::move(d));
  }
  return t;
}

const char* pair_subset_name(PairSubset s) {
  switch (s) {
    case PairSubset::kAll: return "all";
    case PairSubset::kNoMilestone: return "no_milestone";
    case PairSubset::kQuestionsOnly: return "questions";
  }
  return "?";
}

PairSubset parse_pair_subset(std::string_view name) {
  for (auto s : {PairSubset::kAll, PairSubset::kNoMilestone, PairSubset::kQuestionsOnly}) {
    if (name == pair_subset_name(s)) return s;
  }
  throw FormatError("unknown subset '" + std::string(name) +
                    "' (expected all, no_milestone or questions)");
}

stats::RegressionFit fit_engagement(const stats::FeatureTable& table,
                                    std::span<const MessagePair> pairs,
                                    const std::string& dependent, PairSubset subset) {
  if (table.n_rows() != pairs.size()) {
    throw PreconditionError("fit_engagement: table and pairs differ in length");
  }
  std::vector<bool> keep(pairs.size(), true);
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (subset == PairSubset::kNoMilestone) keep[i] = !is_milestone_message(pairs[i].agent_msg);
    if (subset == PairSubset::kQuestionsOnly) keep[i] = has_question_mark(pairs[i].agent_msg);
  }
  const stats::FeatureTable sub = subset == PairSubset::kAll ? table : table.filter(keep);
  std::vector<std::string> covariates(engagement_covariates().begin(),
                                      engagement_covariates().end());
  for (const auto& name : sub.names()) {
    if (name.rfind("city:", 0) != 0) continue;
    const auto& col = sub.column(name);
    if (std::any_of(col.begin(), col.end(), [&](double v) { return v != col.front(); })) {
      covariates.push_back(name);
    }
  }
  return stats::fit_random_intercept(sub, dependent, covariates);
}

EngagementAnalysis analyze_engagement(std::span<const MessagePair> pairs,
                                      std::span<const SocialVector> social) {
  const auto table = engagement_table(pairs, social);
  EngagementAnalysis a;
  a.fits.push_back(fit_engagement(table, pairs, "responded_24h", PairSubset::kAll));
  a.fits.push_back(fit_engagement(table, pairs, "first_trip_7d", PairSubset::kAll));
  a.fits.push_back(fit_engagement(table, pairs, "responded_24h", PairSubset::kNoMilestone));
  a.fits.push_back(fit_engagement(table, pairs, "responded_24h", PairSubset::kQuestionsOnly));
  a.titles = {"Response (all)", "First trip (all)", "Response (no milestone)",
              "Response (questions)"};
  a.rows.assign(engagement_covariates().begin(), engagement_covariates().end());
  return a;
}

// ---- training --------------------------------------------------------------------

TrainingData prepare_training_data(const DatasetSplit& split, const SocialScorer& scorer,
                                   int min_count, size_t max_tokens) {
  if (split.train.empty()) throw PreconditionError("training split is empty");
  std::vector<Tokens> corpus;
  for (const auto& p : split.train) {
    corpus.push_back(p.driver_msg.tokens);
    corpus.push_back(p.agent_msg.tokens);
  }
  TrainingData d;
  d.vocab = neural::Vocab::build(corpus, min_count);
  d.split_fingerprint = split.fingerprint();
  for (const auto& p : split.train) {
    d.train.push_back(neural::make_example(d.vocab, p.driver_msg.tokens, p.agent_msg.tokens,
                                           scorer.score(p.agent_msg), max_tokens));
  }
  for (const auto& p : split.validation) {
    d.validation.push_back(neural::make_example(
        d.vocab, p.driver_msg.tokens, p.agent_msg.tokens, scorer.score(p.agent_msg), max_tokens));
  }
  return d;
}

eval::TrainedModel train_variant(neural::Variant variant, const TrainingData& data,
                                 const neural::ModelDims& dims,
                                 const neural::TrainConfig& config,
                                 const std::function<void(const neural::EpochLog&)>& log) {
  eval::TrainedModel m{eval::Model(variant, data.vocab, dims), {data.split_fingerprint, config.seed}};
  neural::train(m.model, data.train, data.validation, config, log);
  return m;
}

void save_trained_model(const fs::path& path, const eval::TrainedModel& m) {
  std::ostringstream out;
  neural::save_checkpoint(out, m.model, m.info);
  write_file_atomic(path, out.str());
}

eval::TrainedModel load_trained_model(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path.string());
  neural::CheckpointInfo info;
  auto model = neural::load_checkpoint<float>(in, &info);
  return {std::move(model), info};
}

// ---- files -----------------------------------------------------------------------

uint64_t file_fingerprint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  Fnv1a h;
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h.update(std::string_view(buf, static_cast<size_t>(in.gcount())));
  }
  return h.digest();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

std::string hex64(uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

}  // namespace

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["config_hash"] = hex64(config_hash);
  j["toolkit_version"] = toolkit_version;
  auto& in = j["inputs"] = nlohmann::json::object();
  for (const auto& [k, v] : inputs) in[k] = hex64(v);
  auto& out = j["outputs"] = nlohmann::json::object();
  for (const auto& [k, v] : outputs) out[k] = hex64(v);
  j["wall_seconds"] = wall_seconds;
  return j;
}

// ---- report assembly -------------------------------------------------------------

eval::GenerationOptions generation_options(const RunConfig& config) {
  eval::GenerationOptions gen;
  gen.decode.max_len = config.max_len;
  gen.decode.beam_width = config.beam_width;
  gen.max_source_tokens = config.max_tokens;
  return gen;
}

nlohmann::json report_metadata(const RunConfig& config, std::span<const MessagePair> pairs,
                               const DatasetSplit& split, size_t vocab_size) {
  std::set<std::string> drivers;
  for (const auto& p : pairs) drivers.insert(p.driver_id);
  return {{"toolkit_version", kToolkitVersion},
          {"config_hash", hex64(config.hash())},
          {"seed", config.seed},
          {"pairs", pairs.size()},
          {"drivers", drivers.size()},
          {"train_pairs", split.train.size()},
          {"validation_pairs", split.validation.size()},
          {"test_pairs", split.test.size()},
          {"split_fingerprint", hex64(split.fingerprint())},
          {"vocab_size", vocab_size}};
}

eval::ExperimentReport make_report(const EngagementAnalysis& analysis,
                                   const eval::ComparisonReport& content,
                                   const eval::EnhancementResult& politeness,
                                   const eval::EnhancementResult& positivity,
                                   std::span<const MessagePair> test_pairs, size_t samples,
                                   nlohmann::json metadata) {
  eval::ExperimentReport report;
  report.regressions = analysis.fits;
  report.regression_titles = analysis.titles;
  report.regression_rows = analysis.rows;
  report.content = content;
  report.politeness = politeness;
  report.positivity = positivity;
  report.samples = eval::sample_generations(test_pairs, content, politeness, positivity, samples);
  report.metadata = std::move(metadata);
  return report;
}

void write_report(const fs::path& dir, const eval::ExperimentReport& report) {
  write_file_atomic(dir / "report.md", eval::format_report_markdown(report));
  write_file_atomic(dir / "report.json", eval::report_to_json(report).dump(2) + "\n");
}

// ---- pipeline --------------------------------------------------------------------

RunManifest run_pipeline(const RunConfig& config, const ProgressFn& progress) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = config.output_dir;
  fs::create_directories(dir);
  fs::remove(dir / "FAILED");

  RunManifest manifest;
  manifest.command = "pipeline";
  manifest.config_hash = config.hash();
  {
    Fnv1a a, b;
    a.update(bundled_politeness_csv());
    b.update(bundled_mini_lexicon_text());
    manifest.inputs["bundled:politeness_requests.csv"] = a.digest();
    manifest.inputs["bundled:mini_lexicon.tsv"] = b.digest();
  }
  write_file_atomic(dir / "config.txt", config.to_text());

  std::string stage = "setup";
  auto begin = [&](const char* name) {
    stage = name;
    if (progress) progress(name);
  };
  auto write_text = [&](const char* name, const std::string& text) {
    write_file_atomic(dir / name, text);
  };

  try {
    begin("synth");
    SyntheticSpec spec = config.synth;
    spec.rng_seed = config.synth_seed();
    const auto pairs = generate_synthetic_corpus(spec);
    {
      std::ostringstream out;
      write_pairs(out, pairs);
      write_text("pairs.tsv", out.str());
    }

    begin("score");
    const SocialScorer& scorer = default_social_scorer();
    const auto social = score_pairs(pairs, scorer);
    {
      std::ostringstream out;
      write_social_scores(out, pairs, social);
      write_text("social.tsv", out.str());
    }

    begin("analyze");
    const auto analysis = analyze_engagement(pairs, social);
    write_text("regression.txt",
               stats::format_regression_table(analysis.fits, analysis.titles, analysis.rows));
    {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& f : analysis.fits) j.push_back(stats::regression_to_json(f));
      write_text("regression.json", j.dump(2) + "\n");
    }

    begin("split");
    const auto split = split_dataset(pairs, config.split, config.split_seed());
    {
      std::ostringstream out;
      out << "#sdl-split v1\ndriver_id\tpart\n";
      for (const auto& [name, part] : {std::pair{"train", &split.train},
                                       std::pair{"validation", &split.validation},
                                       std::pair{"test", &split.test}}) {
        std::set<std::string> ids;
        for (const auto& p : *part) ids.insert(p.driver_id);
        for (const auto& id : ids) out << escape_field(id) << '\t' << name << '\n';
      }
      write_text("split.tsv", out.str());
    }

    neural::TrainConfig tc = config.train;
    tc.seed = config.train_seed();
    auto train_stage = [&](neural::Variant variant, const char* ckpt, const char* log_name,
                           const TrainingData& data) {
      std::ofstream log(dir / log_name, std::ios::trunc);
      auto m = train_variant(variant, data, config.dims, tc, [&](const neural::EpochLog& e) {
        log << "epoch " << e.epoch << " train_loss " << format_double(e.train_loss)
            << " val_loss " << format_double(e.val_loss) << " seconds " << e.seconds << "\n";
        log.flush();
        if (progress) {
          std::ostringstream s;
          s << "  " << variant_name(variant) << " epoch " << e.epoch << " train "
            << std::setprecision(4) << e.train_loss << " val " << e.val_loss;
          progress(s.str());
        }
      });
      save_trained_model(dir / ckpt, m);
      return m;
    };

    begin("train_lexical");
    const auto data = prepare_training_data(split, scorer, config.vocab_min_count,
                                            config.max_tokens);
    const auto lexical =
        train_stage(neural::Variant::kLexical, "lexical.ckpt", "lexical_train.log", data);
    begin("train_lexical_social");
    const auto social_model = train_stage(neural::Variant::kLexicalSocial, "social.ckpt",
                                          "social_train.log", data);

    const auto gen = generation_options(config);

    begin("evaluate");
    const auto table = eval::embeddings_from_model(lexical.model);
    {
      std::ostringstream out;
      eval::write_embeddings(out, table);
      write_text("embeddings.txt", out.str());
    }
    eval::CompareOptions co;
    co.bleu.max_n = config.bleu_max_n;
    co.generation = gen;
    const auto content = eval::compare_models(lexical, social_model, split.test, scorer, table, co);

    begin("enhance_politeness");
    const auto polite = eval::run_enhancement_experiment(
        social_model.model, split.test, scorer, SocialFeature::kPoliteness, config.delta_sd, gen);
    begin("enhance_positivity");
    const auto positive = eval::run_enhancement_experiment(
        social_model.model, split.test, scorer, SocialFeature::kPositivity, config.delta_sd, gen);

    begin("report");
    write_report(dir, make_report(analysis, content, polite, positive, split.test,
                                  config.report_samples,
                                  report_metadata(config, pairs, split, data.vocab.size())));
  } catch (const std::exception& e) {
    try {
      write_file_atomic(dir / "FAILED", "stage: " + stage + "\nerror: " + e.what() + "\n");
    } catch (...) {
    }
    throw StageError(stage, e.what());
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    if (name == "manifest.json" || f.extension() == ".log") continue;
    manifest.outputs[name] = file_fingerprint(f);
  }
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
  manifest.wall_seconds = dt.count();
  write_file_atomic(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  return manifest;
}

}  // namespace sdl
