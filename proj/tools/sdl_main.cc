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

// sdl: command-line entry point. Exit codes: 0 success, 1 domain error,
// 2 usage error.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdl/corpus.h"
#include "sdl/error.h"
#include "sdl/eval.h"
#include "sdl/pipeline.h"
#include "sdl/politeness.h"
#include "sdl/sentiment.h"
#include "sdl/social.h"
#include "sdl/stats.h"
#include "sdl/synthetic.h"

namespace fs = std::filesystem;

namespace sdl {
namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return in;
}

std::string read_all(const std::string& path) {
  auto in = open_in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<MessagePair> load_pairs(const std::string& path) {
  auto in = open_in(path);
  return read_pairs(in);
}

void write_output(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_file_atomic(p, text);
}

// Config from an optional file, then "key=value" overrides.
RunConfig load_config(const std::string& file, const std::vector<std::string>& overrides) {
  RunConfig c = file.empty() ? RunConfig{} : RunConfig::from_text(read_all(file));
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw FormatError("--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return c;
}

SocialScorer make_scorer(const std::string& lexicon, const std::string& politeness) {
  PolitenessModel pm = default_politeness_model();
  if (!politeness.empty()) {
    auto in = open_in(politeness);
    pm = load_politeness_model(in);
  }
  SentimentLexicon lex = mini_lexicon();
  if (!lexicon.empty()) {
    auto in = open_in(lexicon);
    lex = load_lexicon(in);
  }
  return SocialScorer(std::move(pm), std::move(lex));
}

void check_split(const eval::TrainedModel& m, const DatasetSplit& split, const std::string& what) {
  if (m.info.split_fingerprint != split.fingerprint()) {
    throw PreconditionError(what + " was trained on a different split than the one derived "
                                   "from these pairs and this config");
  }
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void print_enhancement(const eval::EnhancementResult& r) {
  std::cout << social_feature_name(r.feature) << ": unenhanced " << fixed(r.mean_unenhanced, 3)
            << ", enhanced " << fixed(r.mean_enhanced, 3) << " (gain "
            << fixed(100.0 * r.relative_gain, 1) << "%; paired t=" << fixed(r.t_test.statistic, 3)
            << ", df=" << r.t_test.df << ", p=" << r.t_test.p_value << "; n=" << r.n << ")\n";
}

nlohmann::json enhancement_json(const eval::EnhancementResult& r) {
  return {{"feature", social_feature_name(r.feature)},
          {"delta_sd", r.delta_sd},
          {"feature_sd", r.feature_sd},
          {"n", r.n},
          {"mean_unenhanced", r.mean_unenhanced},
          {"mean_enhanced", r.mean_enhanced},
          {"relative_gain", r.relative_gain},
          {"paired_t", stats::test_to_json(r.t_test)},
          {"welch_t", stats::test_to_json(r.welch)}};
}

// Splits "--politeness x --positivity y" overrides out of a REPL line.
std::string parse_repl_line(const std::string& line, std::optional<double>& politeness,
                            std::optional<double>& positivity) {
  std::istringstream in(line);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(w);
  std::vector<std::string> prompt;
  for (size_t i = 0; i < words.size(); ++i) {
    if ((words[i] == "--politeness" || words[i] == "--positivity") && i + 1 < words.size()) {
      (words[i] == "--politeness" ? politeness : positivity) = parse_double(words[i + 1]);
      ++i;
    } else {
      prompt.push_back(words[i]);
    }
  }
  return join(prompt);
}

}  // namespace
}  // namespace sdl

int main(int argc, char** argv) {
  using namespace sdl;
  CLI::App app{"Social-language toolkit: corpus synthesis, scoring, engagement analysis, "
               "response generation and evaluation."};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", kToolkitVersion);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic onboarding corpus");
  SyntheticSpec spec;
  std::string synth_out;
  synth->add_option("--seed", spec.rng_seed, "RNG seed")->capture_default_str();
  synth->add_option("--drivers", spec.n_drivers, "Number of drivers")->capture_default_str();
  synth->add_option("--min-pairs", spec.min_pairs_per_driver, "Minimum pairs per driver")
      ->capture_default_str();
  synth->add_option("--max-pairs", spec.max_pairs_per_driver, "Maximum pairs per driver")
      ->capture_default_str();
  synth->add_option("--politeness-rate", spec.politeness_marker_rate,
                    "Share of replies with politeness markers")
      ->capture_default_str();
  synth->add_option("--positivity-rate", spec.positivity_marker_rate,
                    "Share of replies with positivity markers")
      ->capture_default_str();
  synth->add_option("-o,--out", synth_out, "Output directory (pairs.tsv)")->required();

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Pair raw conversations into message pairs");
  std::string conv_path, drivers_path, ingest_out;
  int64_t window = 3600;
  ingest_cmd->add_option("--conversations", conv_path, "Conversation file")->required();
  ingest_cmd->add_option("--drivers", drivers_path, "Driver metadata file")->required();
  ingest_cmd->add_option("--window", window, "Reply window in seconds")->capture_default_str();
  ingest_cmd->add_option("-o,--out", ingest_out, "Output pairs file")->required();

  // score
  auto* score = app.add_subcommand("score", "Compute politeness and positivity scores");
  std::string score_pairs_path, score_out, lexicon_path, politeness_path, score_text;
  score->add_option("--pairs", score_pairs_path, "Pairs file");
  score->add_option("--text", score_text, "Score a single agent message");
  score->add_option("-o,--out", score_out, "Output social score file");
  score->add_option("--lexicon", lexicon_path, "Valence lexicon (default: bundled mini lexicon)");
  score->add_option("--politeness-model", politeness_path,
                    "Politeness model (default: bundled model)");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Random-intercept engagement regression");
  std::string an_pairs, an_social, an_dependent = "responded_24h", an_subset = "all", an_json;
  analyze->add_option("--pairs", an_pairs, "Pairs file")->required();
  analyze->add_option("--social", an_social, "Social score file (default: score now)");
  analyze->add_option("--dependent", an_dependent, "responded_24h or first_trip_7d")
      ->check(CLI::IsMember({"responded_24h", "first_trip_7d"}))
      ->capture_default_str();
  analyze->add_option("--subset", an_subset, "all, no_milestone or questions")
      ->check(CLI::IsMember({"all", "no_milestone", "questions"}))
      ->capture_default_str();
  analyze->add_option("--json", an_json, "Also write the fit as JSON");

  // shared config options
  std::string config_path;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run config file (key = value)");
    sub->add_option("--set", overrides, "Config override key=value (repeatable)");
  };

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a response generator");
  std::string tr_pairs, tr_variant = "lexical", tr_out, tr_log;
  train_cmd->add_option("--pairs", tr_pairs, "Pairs file")->required();
  train_cmd->add_option("--variant", tr_variant, "lexical or lexical_social")
      ->check(CLI::IsMember({"lexical", "lexical_social"}))
      ->capture_default_str();
  train_cmd->add_option("-o,--out", tr_out, "Checkpoint path")->required();
  train_cmd->add_option("--log", tr_log, "Per-epoch training log file");
  add_config(train_cmd);

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Generate an agent reply");
  std::string gen_model, gen_prompt;
  std::optional<double> gen_polite, gen_positive;
  bool interactive = false;
  int max_len = 40, beam = 1;
  gen_cmd->add_option("--model", gen_model, "Checkpoint path")->required();
  gen_cmd->add_option("--prompt", gen_prompt, "Driver message");
  gen_cmd->add_option("--politeness", gen_polite, "Politeness input (social model)");
  gen_cmd->add_option("--positivity", gen_positive, "Positivity input (social model)");
  gen_cmd->add_flag("--interactive", interactive,
                    "Read prompts from stdin; a line may end with --politeness X --positivity Y");
  gen_cmd->add_option("--max-len", max_len, "Maximum reply length")->capture_default_str();
  gen_cmd->add_option("--beam", beam, "Beam width (1 is greedy)")->capture_default_str();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Compare lexical and lexical_social models");
  std::string ev_pairs, ev_lexical, ev_social, ev_embeddings, ev_out;
  evaluate->add_option("--pairs", ev_pairs, "Pairs file")->required();
  evaluate->add_option("--lexical", ev_lexical, "Lexical checkpoint")->required();
  evaluate->add_option("--social", ev_social, "Lexical_social checkpoint")->required();
  evaluate->add_option("--embeddings", ev_embeddings,
                       "Embedding file (default: the lexical model's embeddings)");
  evaluate->add_option("-o,--out", ev_out, "Write the comparison as JSON");
  add_config(evaluate);

  // enhance
  auto* enhance = app.add_subcommand("enhance", "Unenhanced vs enhanced generation experiment");
  std::string en_pairs, en_model, en_feature = "politeness", en_out;
  std::optional<double> en_delta;
  enhance->add_option("--pairs", en_pairs, "Pairs file")->required();
  enhance->add_option("--model", en_model, "Lexical_social checkpoint")->required();
  enhance->add_option("--feature", en_feature, "politeness or positivity")
      ->check(CLI::IsMember({"politeness", "positivity"}))
      ->capture_default_str();
  enhance->add_option("--delta-sd", en_delta, "Shift in test-set SDs (default from config)");
  enhance->add_option("-o,--out", en_out, "Write the result as JSON");
  add_config(enhance);

  // report
  auto* report_cmd = app.add_subcommand("report", "Rebuild report.md/json from a run directory");
  std::string rep_dir;
  report_cmd->add_option("--dir", rep_dir, "Run directory")->required();

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run every stage end to end");
  std::string pipe_out;
  std::optional<uint64_t> pipe_seed;
  bool print_config = false;
  pipe->add_option("-o,--out", pipe_out, "Output directory (overrides output_dir)");
  pipe->add_option("--seed", pipe_seed, "Global seed (overrides seed)");
  pipe->add_flag("--print-config", print_config, "Print the effective config and exit");
  add_config(pipe);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      const auto pairs = generate_synthetic_corpus(spec);
      std::ostringstream out;
      write_pairs(out, pairs);
      fs::create_directories(synth_out);
      write_file_atomic(fs::path(synth_out) / "pairs.tsv", out.str());
      std::cout << "wrote " << pairs.size() << " pairs to "
                << (fs::path(synth_out) / "pairs.tsv").string() << "\n";
    } else if (ingest_cmd->parsed()) {
      auto cin_ = open_in(conv_path);
      auto din = open_in(drivers_path);
      const auto convs = read_conversations(cin_);
      const auto drivers = read_drivers(din);
      const auto pairs = ingest(convs, drivers, window);
      std::ostringstream out;
      write_pairs(out, pairs);
      write_output(ingest_out, out.str());
      std::cout << "wrote " << pairs.size() << " pairs to " << ingest_out << "\n";
    } else if (score->parsed()) {
      const SocialScorer scorer = make_scorer(lexicon_path, politeness_path);
      if (!score_text.empty()) {
        const auto u = make_utterance(score_text, Speaker::kAgent, 0);
        const auto s = score_sentiment(scorer.lexicon(), u.surface_tokens);
        std::cout << "politeness " << fixed(scorer.politeness(u), 4) << "\n"
                  << "positive " << fixed(s.pos, 4) << "\nnegative " << fixed(s.neg, 4)
                  << "\nneutral " << fixed(s.neu, 4) << "\n";
      } else {
        if (score_pairs_path.empty() || score_out.empty()) {
          std::cerr << "score: --pairs and --out are required unless --text is given\n"
                    << score->help();
          return 2;
        }
        const auto pairs = load_pairs(score_pairs_path);
        const auto social = score_pairs(pairs, scorer);
        std::ostringstream out;
        write_social_scores(out, pairs, social);
        write_output(score_out, out.str());
        std::cout << "scored " << pairs.size() << " agent replies\n";
      }
    } else if (analyze->parsed()) {
      const auto pairs = load_pairs(an_pairs);
      std::vector<SocialVector> social;
      if (an_social.empty()) {
        social = score_pairs(pairs, default_social_scorer());
      } else {
        auto in = open_in(an_social);
        social = read_social_scores(in);
      }
      const auto table = engagement_table(pairs, social);
      const auto fit = fit_engagement(table, pairs, an_dependent, parse_pair_subset(an_subset));
      const std::vector<stats::RegressionFit> fits{fit};
      const std::vector<std::string> titles{an_dependent + " (" + an_subset + ")"};
      const std::vector<std::string> rows(engagement_covariates().begin(),
                                          engagement_covariates().end());
      std::cout << stats::format_regression_table(fits, titles, rows);
      std::cout << "n=" << fit.n_obs << ", drivers=" << fit.n_groups
                << ", driver variance=" << fit.random_intercept_variance
                << ", residual variance=" << fit.residual_variance << "\n";
      if (!an_json.empty()) write_output(an_json, stats::regression_to_json(fit).dump(2) + "\n");
    } else if (train_cmd->parsed()) {
      const RunConfig config = load_config(config_path, overrides);
      config.validate();
      const auto pairs = load_pairs(tr_pairs);
      const auto split = split_dataset(pairs, config.split, config.split_seed());
      const auto data = prepare_training_data(split, default_social_scorer(),
                                              config.vocab_min_count, config.max_tokens);
      neural::TrainConfig tc = config.train;
      tc.seed = config.train_seed();
      std::ofstream log;
      if (!tr_log.empty()) log.open(tr_log, std::ios::trunc);
      const auto m = train_variant(
          neural::parse_variant(tr_variant), data, config.dims, tc,
          [&](const neural::EpochLog& e) {
            std::ostringstream line;
            line << "epoch " << e.epoch << " train_loss " << format_double(e.train_loss)
                 << " val_loss " << format_double(e.val_loss) << " seconds " << e.seconds;
            std::cerr << line.str() << "\n";
            if (log.is_open()) log << line.str() << "\n";
          });
      save_trained_model(tr_out, m);
      std::cout << "saved " << tr_variant << " model to " << tr_out << "\n";
    } else if (gen_cmd->parsed()) {
      const auto m = load_trained_model(gen_model);
      const bool social = m.model.variant() == neural::Variant::kLexicalSocial;
      eval::GenerationOptions opts;
      opts.decode.max_len = max_len;
      opts.decode.beam_width = beam;
      auto reply = [&](const std::string& text, std::optional<double> po,
                       std::optional<double> ps) {
        std::optional<SocialVector> s;
        if (social) {
          if (!po || !ps) {
            throw PreconditionError(
                "a lexical_social model needs --politeness and --positivity");
          }
          s = SocialVector{*po, *ps};
        } else if (po || ps) {
          throw PreconditionError("a lexical model takes no social inputs");
        }
        const auto u = make_utterance(text, Speaker::kDriver, 0);
        return join(eval::generate_reply(m.model, u.tokens, s, opts));
      };
      if (interactive) {
        std::string line;
        std::cout << "> " << std::flush;
        while (std::getline(std::cin, line)) {
          if (line == ":quit" || line == ":q") break;
          std::optional<double> po = gen_polite, ps = gen_positive;
          const std::string text = parse_repl_line(line, po, ps);
          if (!text.empty()) {
            try {
              std::cout << reply(text, po, ps) << "\n";
            } catch (const Error& e) {
              std::cout << "error: " << e.what() << "\n";
            }
          }
          std::cout << "> " << std::flush;
        }
        std::cout << "\n";
      } else {
        if (gen_prompt.empty()) {
          std::cerr << "generate: --prompt or --interactive is required\n" << gen_cmd->help();
          return 2;
        }
        std::cout << reply(gen_prompt, gen_polite, gen_positive) << "\n";
      }
    } else if (evaluate->parsed()) {
      const RunConfig config = load_config(config_path, overrides);
      config.validate();
      const auto pairs = load_pairs(ev_pairs);
      const auto split = split_dataset(pairs, config.split, config.split_seed());
      const auto lexical = load_trained_model(ev_lexical);
      const auto social = load_trained_model(ev_social);
      check_split(lexical, split, "lexical model");
      check_split(social, split, "lexical_social model");
      eval::EmbeddingTable table;
      if (ev_embeddings.empty()) {
        table = eval::embeddings_from_model(lexical.model);
      } else {
        auto in = open_in(ev_embeddings);
        table = eval::read_embeddings(in);
      }
      eval::CompareOptions co;
      co.bleu.max_n = config.bleu_max_n;
      co.generation = generation_options(config);
      const auto r =
          eval::compare_models(lexical, social, split.test, default_social_scorer(), table, co);
      std::cout << "BLEU: lexical " << fixed(r.bleu_lexical, 2) << ", lexical_social "
                << fixed(r.bleu_social, 2) << " (" << fixed(100.0 * r.bleu_gain, 1) << "%)\n"
                << "similarity: lexical " << fixed(r.similarity_lexical, 3)
                << ", lexical_social " << fixed(r.similarity_social, 3) << " ("
                << fixed(100.0 * r.similarity_gain, 1) << "%; paired t="
                << fixed(r.similarity_test.statistic, 3) << ", p=" << r.similarity_test.p_value
                << "; " << r.similarity_excluded << " excluded)\n";
      if (!ev_out.empty()) {
        eval::ExperimentReport rep;
        rep.content = r;
        write_output(ev_out, eval::report_to_json(rep)["content_preservation"].dump(2) + "\n");
      }
    } else if (enhance->parsed()) {
      const RunConfig config = load_config(config_path, overrides);
      config.validate();
      const auto pairs = load_pairs(en_pairs);
      const auto split = split_dataset(pairs, config.split, config.split_seed());
      const auto m = load_trained_model(en_model);
      check_split(m, split, "model");
      const auto r = eval::run_enhancement_experiment(
          m.model, split.test, default_social_scorer(), parse_social_feature(en_feature),
          en_delta.value_or(config.delta_sd), generation_options(config));
      print_enhancement(r);
      if (!en_out.empty()) write_output(en_out, enhancement_json(r).dump(2) + "\n");
    } else if (report_cmd->parsed()) {
      const fs::path dir(rep_dir);
      RunConfig config;
      if (fs::exists(dir / "config.txt")) config = RunConfig::from_text(read_all(dir / "config.txt"));
      config.validate();
      const auto pairs = load_pairs(dir / "pairs.tsv");
      std::vector<SocialVector> social;
      if (fs::exists(dir / "social.tsv")) {
        auto in = open_in(dir / "social.tsv");
        social = read_social_scores(in);
      } else {
        social = score_pairs(pairs, default_social_scorer());
      }
      const auto analysis = analyze_engagement(pairs, social);
      const auto split = split_dataset(pairs, config.split, config.split_seed());
      const auto lexical = load_trained_model(dir / "lexical.ckpt");
      const auto social_model = load_trained_model(dir / "social.ckpt");
      check_split(lexical, split, "lexical model");
      check_split(social_model, split, "lexical_social model");
      const auto& scorer = default_social_scorer();
      const auto gen = generation_options(config);
      eval::CompareOptions co;
      co.bleu.max_n = config.bleu_max_n;
      co.generation = gen;
      const auto content = eval::compare_models(lexical, social_model, split.test, scorer,
                                                eval::embeddings_from_model(lexical.model), co);
      const auto po = eval::run_enhancement_experiment(
          social_model.model, split.test, scorer, SocialFeature::kPoliteness, config.delta_sd, gen);
      const auto ps = eval::run_enhancement_experiment(
          social_model.model, split.test, scorer, SocialFeature::kPositivity, config.delta_sd, gen);
      write_report(dir, make_report(analysis, content, po, ps, split.test, config.report_samples,
                                    report_metadata(config, pairs, split,
                                                    lexical.model.vocab().size())));
      std::cout << "wrote " << (dir / "report.md").string() << "\n";
    } else if (pipe->parsed()) {
      RunConfig config = load_config(config_path, overrides);
      if (!pipe_out.empty()) config.output_dir = pipe_out;
      if (pipe_seed) config.seed = *pipe_seed;
      if (fs::path(config.output_dir).is_relative()) {
        config.output_dir = (default_output_root() / config.output_dir).string();
      }
      if (print_config) {
        std::cout << config.to_text();
        return 0;
      }
      const auto manifest = run_pipeline(config, [](const std::string& stage) {
        std::cerr << stage << "\n";
      });
      std::cout << "report: " << (fs::path(config.output_dir) / "report.md").string() << "\n"
                << "manifest: " << (fs::path(config.output_dir) / "manifest.json").string()
                << " (" << fixed(manifest.wall_seconds, 1) << " s)\n";
    }
  } catch (const sdl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
