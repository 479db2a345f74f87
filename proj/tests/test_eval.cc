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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sdl/corpus.h"
#include "sdl/error.h"
#include "sdl/eval.h"
#include "sdl/random.h"
#include "sdl/social.h"
#include "support.h"

using namespace sdl;
using namespace sdl::eval;
namespace ref = sdl::testing;

namespace {

std::vector<Tokens> random_corpus(Rng& rng, size_t pairs, size_t vocab, size_t max_len) {
  std::vector<Tokens> out;
  for (size_t i = 0; i < pairs; ++i) {
    Tokens t;
    const size_t len = rng.below(max_len + 1);
    for (size_t k = 0; k < len; ++k) t.push_back("t" + std::to_string(rng.below(vocab)));
    out.push_back(t);
  }
  return out;
}

std::vector<MessagePair> toy_pairs() {
  std::vector<MessagePair> out;
  int64_t t = 0;
  int n = 0;
  for (const auto& [q, r] : ref::toy_dialogue_corpus()) {
    MessagePair p;
    p.driver_id = "toy" + std::to_string(n++ % 8);
    p.driver_msg = make_utterance(join(q), Speaker::kDriver, t);
    p.agent_msg = make_utterance(join(r), Speaker::kAgent, t + 60);
    t += 1000;
    out.push_back(std::move(p));
  }
  return out;
}

// Social model trained to reproduce the toy replies from their own social
// vectors; shared by the comparison and enhancement tests.
const TrainedModel& memorized_social() {
  static const TrainedModel m = [] {
    const auto pairs = toy_pairs();
    const SocialScorer& scorer = default_social_scorer();
    std::vector<Tokens> corpus;
    for (const auto& p : pairs) {
      corpus.push_back(p.driver_msg.tokens);
      corpus.push_back(p.agent_msg.tokens);
    }
    const auto vocab = neural::Vocab::build(corpus, 1);
    std::vector<neural::Example> ex;
    for (const auto& p : pairs) {
      ex.push_back(neural::make_example(vocab, p.driver_msg.tokens, p.agent_msg.tokens,
                                        scorer.score(p.agent_msg)));
    }
    Model model(neural::Variant::kLexicalSocial, vocab, {32, 64});
    neural::TrainConfig c;
    c.learning_rate = 1.0;
    c.batch_size = 4;
    c.max_epochs = 2000;
    c.patience = 2000;
    c.target_train_loss = 0.02;
    c.seed = 3;
    neural::train(model, ex, ex, c);
    return TrainedModel{model, {42, 3}};
  }();
  return m;
}

// Lexical and social models whose decoders ignore the initial state, so
// both produce the same replies.
std::pair<TrainedModel, TrainedModel> state_blind_pair() {
  const auto pairs = toy_pairs();
  std::vector<Tokens> corpus;
  for (const auto& p : pairs) corpus.push_back(p.agent_msg.tokens);
  const auto vocab = neural::Vocab::build(corpus, 1);
  Model lex(neural::Variant::kLexical, vocab, {8, 8});
  lex.init_uniform(0.5, 4);
  const int h = 8;
  lex.param(neural::kDecW).rightCols(h).setZero();
  lex.param(neural::kDecB).middleRows(h, h).setConstant(-1e4f);
  Model soc(neural::Variant::kLexicalSocial, vocab, {8, 8});
  soc.init_uniform(0.5, 9);
  for (size_t k = 0; k < lex.params().size(); ++k) soc.params()[k] = lex.params()[k];
  return {TrainedModel{lex, {7, 1}}, TrainedModel{soc, {7, 2}}};
}

}  // namespace

// ---- BLEU --------------------------------------------------------------------------------

TEST_CASE("bleu examples") {
  const std::vector<Tokens> refs = {{"the", "cat", "sat", "on", "the", "mat"},
                                    {"a", "b", "c", "d"}};
  CHECK(bleu(refs, refs) == doctest::Approx(100.0).epsilon(1e-12));

  const std::vector<Tokens> none = {{"x", "y", "z"}, {"q"}};
  CHECK(bleu(none, refs) == 0.0);

  // "the cat sat" vs "the cat sat down": orders 1-3 match fully, order 4
  // has no candidate n-grams; brevity penalty exp(1 - 4/3).
  const std::vector<Tokens> c1 = {{"the", "cat", "sat"}};
  const std::vector<Tokens> r1 = {{"the", "cat", "sat", "down"}};
  const auto o = ref::oracle_bleu(c1, r1, 4);
  CHECK(o.matches == std::vector<long>{3, 2, 1, 0});
  CHECK(o.totals == std::vector<long>{3, 2, 1, 0});
  CHECK(bleu(c1, r1) == doctest::Approx(o.score).epsilon(1e-12));
  CHECK(bleu(c1, r1) == doctest::Approx(100.0 * std::exp(1.0 - 4.0 / 3.0)).epsilon(1e-12));

  CHECK_THROWS_AS(bleu(std::vector<Tokens>{}, std::vector<Tokens>{}), PreconditionError);
  CHECK_THROWS_AS(bleu(c1, refs), PreconditionError);
}

TEST_CASE("bleu matches the brute-force counter") {
  Rng rng(50);
  for (int trial = 0; trial < 500; ++trial) {
    const size_t pairs = 1 + rng.below(5);
    const auto c = random_corpus(rng, pairs, 4, 10);
    const auto r = random_corpus(rng, pairs, 4, 10);
    for (int max_n : {1, 2, 4}) {
      const auto o = ref::oracle_bleu(c, r, static_cast<size_t>(max_n));
      const auto s = bleu_stats(c, r, max_n);
      for (int n = 0; n < max_n; ++n) {
        REQUIRE(s.matches[n] == o.matches[n]);
        REQUIRE(s.totals[n] == o.totals[n]);
      }
      REQUIRE(s.candidate_length == o.cand_len);
      REQUIRE(s.reference_length == o.ref_len);
      bool any = false;
      for (long t : o.totals) any |= t > 0;
      if (!any) continue;
      REQUIRE(std::fabs(bleu(c, r, {max_n, Smoothing::kNone}) - o.score) < 1e-12);
    }
  }
}

TEST_CASE("bleu is symmetric under corpus order") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t pairs = 2 + rng.below(5);
    auto c = random_corpus(rng, pairs, 5, 8);
    auto r = random_corpus(rng, pairs, 5, 8);
    c[0].push_back("t1");
    const double base = bleu(c, r);
    std::vector<size_t> order(pairs);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<size_t>(order));
    std::vector<Tokens> c2, r2;
    for (size_t i : order) {
      c2.push_back(c[i]);
      r2.push_back(r[i]);
    }
    REQUIRE(bleu(c2, r2) == base);
  }
}

TEST_CASE("bleu is 100 exactly when every candidate equals its reference") {
  Rng rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const size_t pairs = 1 + rng.below(4);
    auto r = random_corpus(rng, pairs, 3, 6);
    for (auto& t : r) t.push_back("end");
    auto c = r;
    if (rng.bernoulli(0.6)) {
      auto& t = c[rng.below(pairs)];
      switch (rng.below(3)) {
        case 0: t.push_back("t0"); break;
        case 1: t.pop_back(); break;
        default: t[rng.below(t.size())] = "other"; break;
      }
    }
    const double s = bleu(c, r);
    REQUIRE((std::fabs(s - 100.0) < 1e-9) == (c == r));
  }
}

TEST_CASE("reference-suffix padding only lifts the brevity penalty") {
  const Tokens ref_tokens = {"your", "background", "check", "is", "complete", "now", "."};
  double prev = 0.0;
  for (size_t len = 4; len <= ref_tokens.size(); ++len) {
    const std::vector<Tokens> c = {Tokens(ref_tokens.begin(), ref_tokens.begin() + len)};
    const std::vector<Tokens> r = {ref_tokens};
    const auto s = bleu_stats(c, r, 4);
    for (int n = 0; n < 4; ++n) REQUIRE(s.matches[n] == s.totals[n]);
    const double v = bleu(c, r);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(prev == doctest::Approx(100.0));
}

TEST_CASE("add-one smoothing") {
  const std::vector<Tokens> c = {{"a", "b", "x", "y"}};
  const std::vector<Tokens> r = {{"a", "b", "c", "d"}};
  CHECK(bleu(c, r) == 0.0);
  // Precisions 2/4, 1/3, then 1/(2+1) and 1/(1+1) for the empty orders.
  const double want =
      100.0 * std::exp((std::log(0.5) + std::log(1.0 / 3) + std::log(1.0 / 3) + std::log(0.5)) / 4);
  CHECK(bleu(c, r, {4, Smoothing::kAddOne}) == doctest::Approx(want).epsilon(1e-12));
}

// ---- similarity --------------------------------------------------------------------------

TEST_CASE("embedding similarity") {
  EmbeddingTable t(2);
  t.add("a", {1.0, 0.0});
  t.add("b", {0.0, 1.0});
  t.add("c", {1.0, 2.0});
  t.add("d", {-1.0, 0.0});
  CHECK(embedding_similarity({"a", "c"}, {"a", "c"}, t) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::fabs(embedding_similarity({"a"}, {"b"}, t)) < 1e-15);
  CHECK(std::fabs(embedding_similarity({"a", "b"}, {"d", "b"}, t)) < 1e-15);

  // mean(a, b, c) = (2/3, 1); mean(c, d) = (0, 1).
  const double want = 1.0 / std::sqrt(4.0 / 9.0 + 1.0);
  CHECK(embedding_similarity({"a", "b", "c"}, {"c", "d"}, t) ==
        doctest::Approx(want).epsilon(1e-14));
  CHECK(embedding_similarity({"c", "b", "a"}, {"d", "c"}, t) ==
        doctest::Approx(want).epsilon(1e-14));
  CHECK(embedding_similarity({"a", "zzz", "b", "c"}, {"c", "d"}, t) ==
        doctest::Approx(want).epsilon(1e-14));

  CHECK_THROWS_AS(embedding_similarity({"zzz"}, {"a"}, t), DegenerateError);
  CHECK_THROWS_AS(embedding_similarity({"a"}, {}, t), DegenerateError);
  CHECK_THROWS_AS(embedding_similarity({"a", "d"}, {"b"}, t), DegenerateError);
  CHECK_THROWS_AS(t.add("e", {1.0}), PreconditionError);
}

TEST_CASE("similarity ignores token order") {
  EmbeddingTable t(3);
  Rng rng(1);
  for (int i = 0; i < 10; ++i) t.add("w" + std::to_string(i), {rng.normal(), rng.normal(), rng.normal()});
  for (int trial = 0; trial < 200; ++trial) {
    Tokens a, b;
    for (size_t k = 0; k < 1 + rng.below(6); ++k) a.push_back("w" + std::to_string(rng.below(10)));
    for (size_t k = 0; k < 1 + rng.below(6); ++k) b.push_back("w" + std::to_string(rng.below(10)));
    Tokens a2 = a;
    std::reverse(a2.begin(), a2.end());
    REQUIRE(embedding_similarity(a2, b, t) == doctest::Approx(embedding_similarity(a, b, t)).epsilon(1e-13));
  }
}

TEST_CASE("embedding file round trip") {
  EmbeddingTable t(2);
  t.add("hello", {0.25, -1.5});
  t.add("world", {3.0, 1e-7});
  std::stringstream ss;
  write_embeddings(ss, t);
  CHECK(ss.str().rfind("2 2\n", 0) == 0);
  const EmbeddingTable back = read_embeddings(ss);
  CHECK(back.vectors() == t.vectors());
  std::stringstream bad("2\nhello 1 2\n");
  CHECK_THROWS_AS(read_embeddings(bad), FormatError);
  std::stringstream short_row("1 3\nhello 1 2\n");
  CHECK_THROWS_AS(read_embeddings(short_row), FormatError);
}

// ---- model comparison -----------------------------------------------------------------------

TEST_CASE("self-comparison has zero gain") {
  const auto [lex, soc] = state_blind_pair();
  const auto pairs = toy_pairs();
  const auto table = embeddings_from_model(soc.model);
  const auto r = compare_models(lex, soc, pairs, default_social_scorer(), table);
  CHECK(r.lexical_outputs == r.social_outputs);
  CHECK(r.bleu_social == r.bleu_lexical);
  CHECK(r.similarity_social == r.similarity_lexical);
  CHECK(r.similarity_test.statistic == 0.0);
  CHECK(r.similarity_test.p_value == 1.0);
  if (r.bleu_lexical > 0) CHECK(r.bleu_gain == 0.0);
  if (r.similarity_lexical != 0) CHECK(r.similarity_gain == 0.0);
  CHECK(r.n_pairs == pairs.size());
  CHECK(r.similarity_pairs + r.similarity_excluded == pairs.size());
}

TEST_CASE("comparison refuses mismatched splits and variants") {
  auto [lex, soc] = state_blind_pair();
  const auto pairs = toy_pairs();
  const auto table = embeddings_from_model(soc.model);
  soc.info.split_fingerprint = 8;
  CHECK_THROWS_AS(compare_models(lex, soc, pairs, default_social_scorer(), table),
                  PreconditionError);
  soc.info.split_fingerprint = lex.info.split_fingerprint;
  CHECK_THROWS_AS(compare_models(soc, lex, pairs, default_social_scorer(), table),
                  PreconditionError);
}

TEST_CASE("a memorized social model beats an untrained lexical model") {
  const TrainedModel& soc = memorized_social();
  Model untrained(neural::Variant::kLexical, soc.model.vocab(), soc.model.dims());
  untrained.init_uniform(0.1, 1);
  const TrainedModel lex{untrained, soc.info};
  const auto pairs = toy_pairs();
  const auto r = compare_models(lex, soc, pairs, default_social_scorer(),
                                embeddings_from_model(soc.model));
  MESSAGE("bleu lexical " << r.bleu_lexical << " social " << r.bleu_social);
  CHECK(r.bleu_social > r.bleu_lexical);
  CHECK(r.bleu_social > 90.0);
}

// ---- enhancement ------------------------------------------------------------------------------

TEST_CASE("zero shift reproduces the unenhanced generations") {
  const TrainedModel& soc = memorized_social();
  const auto pairs = toy_pairs();
  const auto social = reference_social_vectors(pairs, default_social_scorer());
  const ReplyRater rate = [](const Utterance& u) {
    return default_social_scorer().politeness(u);
  };
  const auto r = run_enhancement_experiment(soc.model, pairs, social, SocialFeature::kPoliteness,
                                            rate, 0.0);
  CHECK(r.enhanced_outputs == r.unenhanced_outputs);
  CHECK(r.mean_enhanced == r.mean_unenhanced);
  CHECK(r.relative_gain == 0.0);
  CHECK(r.t_test.statistic == 0.0);
  CHECK(r.n == pairs.size());
}

TEST_CASE("scaling the rater scales the means but not the t statistic") {
  const TrainedModel& soc = memorized_social();
  const auto pairs = toy_pairs();
  std::vector<SocialVector> social;
  for (size_t i = 0; i < pairs.size(); ++i) {
    social.push_back({static_cast<double>(i % 4) / 4.0, static_cast<double>(i % 3) / 3.0});
  }
  // Token count is a rater that varies with the generated text.
  const ReplyRater rate = [](const Utterance& u) {
    return static_cast<double>(u.tokens.size()) + default_social_scorer().positivity(u);
  };
  const ReplyRater twice = [&rate](const Utterance& u) { return 2.0 * rate(u); };
  for (SocialFeature f : {SocialFeature::kPoliteness, SocialFeature::kPositivity}) {
    const auto a = run_enhancement_experiment(soc.model, pairs, social, f, rate, 3.0);
    const auto b = run_enhancement_experiment(soc.model, pairs, social, f, twice, 3.0);
    const auto again = run_enhancement_experiment(soc.model, pairs, social, f, rate, 3.0);
    CHECK(again.mean_enhanced == a.mean_enhanced);
    CHECK(again.mean_unenhanced == a.mean_unenhanced);
    CHECK(b.mean_enhanced == doctest::Approx(2.0 * a.mean_enhanced).epsilon(1e-14));
    CHECK(b.mean_unenhanced == doctest::Approx(2.0 * a.mean_unenhanced).epsilon(1e-14));
    const double da = a.mean_enhanced - a.mean_unenhanced;
    const double db = b.mean_enhanced - b.mean_unenhanced;
    CHECK((da > 0) == (db > 0));
    CHECK((da < 0) == (db < 0));
    CHECK(b.t_test.statistic == doctest::Approx(a.t_test.statistic).epsilon(1e-12));
    CHECK(a.relative_gain ==
          doctest::Approx(a.mean_enhanced / a.mean_unenhanced - 1.0).epsilon(1e-14));
    CHECK(a.feature_sd > 0.0);
  }
}

TEST_CASE("enhancement needs feature variation") {
  const TrainedModel& soc = memorized_social();
  const auto pairs = toy_pairs();
  const std::vector<SocialVector> flat(pairs.size(), SocialVector{0.5, 0.5});
  const ReplyRater rate = [](const Utterance&) { return 1.0; };
  CHECK_THROWS_AS(run_enhancement_experiment(soc.model, pairs, flat, SocialFeature::kPoliteness,
                                             rate, 1.0),
                  DegenerateError);
  const auto [lex, unused] = state_blind_pair();
  (void)unused;
  CHECK_THROWS_AS(run_enhancement_experiment(lex.model, pairs, default_social_scorer(),
                                             SocialFeature::kPoliteness),
                  PreconditionError);
}

// ---- report -------------------------------------------------------------------------------------

TEST_CASE("report contains all four tables and redacted samples") {
  const TrainedModel& soc = memorized_social();
  auto pairs = toy_pairs();
  pairs[0].driver_msg = make_utterance("Hi, this is Maria at 415-555-0100, when is my insurance ready ?",
                                       Speaker::kDriver, 0);
  const auto [lex, unused] = state_blind_pair();
  (void)unused;
  const TrainedModel lex_same{lex.model, soc.info};
  ExperimentReport rep;
  rep.content = compare_models(lex_same, soc, pairs, default_social_scorer(),
                               embeddings_from_model(soc.model));
  rep.politeness = run_enhancement_experiment(soc.model, pairs, default_social_scorer(),
                                              SocialFeature::kPoliteness);
  rep.positivity = run_enhancement_experiment(soc.model, pairs, default_social_scorer(),
                                              SocialFeature::kPositivity);
  rep.samples = sample_generations(pairs, rep.content, rep.politeness, rep.positivity, 3);
  rep.metadata["seed"] = 1;
  const std::string md = format_report_markdown(rep);
  for (const char* heading : {"Table 1", "Table 2", "Table 3", "Table 4"}) {
    CHECK(md.find(heading) != std::string::npos);
  }
  CHECK(md.find("Maria") == std::string::npos);
  CHECK(md.find("555") == std::string::npos);
  CHECK(md.find("(") != std::string::npos);
  CHECK(format_report_markdown(rep) == md);
  const auto js = report_to_json(rep);
  CHECK(js.contains("metadata"));
  CHECK(js.contains("regressions"));
  CHECK(js.contains("content_preservation"));
  CHECK(js["enhancement"].contains("politeness"));
  CHECK(js["enhancement"].contains("positivity"));
  CHECK(js["samples"].size() == 3);
}
