// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include "../support/oracles.hpp"
#include "promptforge/core/error.hpp"
#include "promptforge/core/random.hpp"
#include "promptforge/core/registry.hpp"
#include "promptforge/models/backend.hpp"

namespace pf = promptforge;
namespace pm = promptforge::models;

namespace {

std::vector<int> random_ids(pf::Rng& rng, std::size_t n, int vocab) {
  std::vector<int> ids(n);
  for (auto& id : ids) id = static_cast<int>(rng.index(static_cast<std::size_t>(vocab)));
  return ids;
}

}  // namespace

TEST(Tokenizer, RoundTripsAlphabetStrings) {
  pm::CharTokenizer tok(pm::CharTokenizer::default_alphabet());
  EXPECT_EQ(tok.vocab_size(), 64);
  EXPECT_EQ(tok.detokenize(tok.tokenize("abc")), "abc");
  const std::string all = pm::CharTokenizer::default_alphabet();
  EXPECT_EQ(tok.detokenize(tok.tokenize(all)), all);
}

TEST(Tokenizer, RejectsCharactersOutsideAlphabet) {
  pm::CharTokenizer tok(pm::CharTokenizer::default_alphabet());
  EXPECT_FALSE(tok.can_represent("Think"));
  EXPECT_EQ(tok.first_unrepresentable("ab\tc"), 2u);
  try {
    tok.tokenize("aBc");
    FAIL();
  } catch (const pf::ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("0x42"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("offset 1"), std::string::npos);
  }
  const std::vector<int> bad = {70};
  EXPECT_THROW(tok.detokenize(bad), pf::IndexError);
}

TEST(TokenizerDeath, DuplicateAlphabetSymbolsRejected) {
  EXPECT_THROW(pm::CharTokenizer("abca"), pf::ValidationError);
}

TEST(TinyModel, SameSeedGivesIdenticalWeights) {
  auto a = pm::tiny_reference_model(0);
  auto b = pm::tiny_reference_model(0);
  auto c = pm::tiny_reference_model(1);
  EXPECT_TRUE(a.network().weights() == b.network().weights());
  EXPECT_FALSE(a.network().weights() == c.network().weights());
}

TEST(TinyModel, ShapesMatchReferenceConfig) {
  auto model = pm::tiny_reference_model(0);
  EXPECT_EQ(model.vocab_size(), 64);
  EXPECT_EQ(model.embedding_dim(), 16);
  const auto& table = pm::embedding_table(model);
  EXPECT_EQ(table.rows(), 64);
  EXPECT_EQ(table.cols(), 16);
  EXPECT_EQ(&table, &pm::embedding_table(model));
  EXPECT_GT(table.rowwise().norm().minCoeff(), 0.0);

  const std::vector<int> ids = model.tokenize("abcdefgh");
  const Eigen::MatrixXd logits = model.logits(model.embed(ids));
  EXPECT_EQ(logits.rows(), 8);
  EXPECT_EQ(logits.cols(), 64);
}

TEST(TinyModel, IncrementalDecoderMatchesFullForward) {
  auto model = pm::tiny_reference_model(2);
  pf::Rng rng(5);
  const auto ids = random_ids(rng, 20, 64);
  const Eigen::MatrixXd full = model.logits(model.embed(ids));
  pm::TinyTransformer<double>::Decoder dec(model.network());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Eigen::RowVectorXd row = dec.push(model.embedding_table().row(ids[i]));
    EXPECT_LT((row - full.row(static_cast<Eigen::Index>(i))).cwiseAbs().maxCoeff(), 1e-10) << i;
  }
}

TEST(TinyModel, GreedyGenerationIsDeterministicAndFollowsArgmax) {
  auto model = pm::tiny_reference_model(0);
  const auto ctx = model.tokenize("what is 2+2?\n");
  pm::DecodeOptions opts;
  opts.max_new_tokens = 12;
  const auto a = model.generate(ctx, opts);
  const auto b = model.generate(ctx, opts);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 12u);

  std::vector<int> seq = ctx;
  for (int expected : a) {
    const Eigen::MatrixXd logits = model.logits(model.embed(seq));
    Eigen::Index arg = 0;
    logits.row(logits.rows() - 1).maxCoeff(&arg);
    EXPECT_EQ(arg, expected);
    seq.push_back(expected);
  }
}

TEST(TinyModel, GenerationHonoursStopCallback) {
  auto model = pm::tiny_reference_model(0);
  pm::DecodeOptions opts;
  opts.max_new_tokens = 50;
  opts.should_stop = [](std::span<const int> g) { return g.size() == 3; };
  EXPECT_EQ(model.generate(model.tokenize("q"), opts).size(), 3u);
  opts.max_new_tokens = 0;
  EXPECT_TRUE(model.generate(model.tokenize("q"), opts).empty());
}

TEST(TinyModel, SampledGenerationIsSeedDeterministic) {
  auto model = pm::tiny_reference_model(0);
  pm::DecodeOptions opts;
  opts.max_new_tokens = 30;
  opts.temperature = 1.5;
  opts.seed = 9;
  const auto ctx = model.tokenize("abc");
  EXPECT_EQ(model.generate(ctx, opts), model.generate(ctx, opts));
}

TEST(TinyModel, SaveLoadRoundTripIsBitExact) {
  auto model = pm::tiny_reference_model(1);
  const auto dir = std::filesystem::temp_directory_path() / "pf_tiny_roundtrip";
  std::filesystem::remove_all(dir);
  pm::save_tiny_model(model, 1, dir);
  auto loaded = pm::load_local_model(dir);
  EXPECT_TRUE(loaded->network().weights() == model.network().weights());
  EXPECT_EQ(loaded->model().kind, pf::ModelKind::local);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(pm::load_local_model(dir), pf::IoError);
}

TEST(ForwardLoss, GradientShapeMatchesSpan) {
  auto model = pm::tiny_reference_model(0);
  const auto ids = model.tokenize("question: ab prompt xyz");
  const std::vector<int> gold = model.tokenize("42");
  const auto r = pm::forward_loss(model, ids, {3, 9}, gold, ids.size(), "cross_entropy");
  EXPECT_EQ(r.prompt_grads.rows(), 6);
  EXPECT_EQ(r.prompt_grads.cols(), 16);
  EXPECT_GE(r.loss, 0.0);
  EXPECT_NEAR(r.loss, pm::evaluate_loss(model, ids, gold, ids.size(), "cross_entropy"), 1e-12);
}

TEST(ForwardLoss, RejectsBadLayouts) {
  auto model = pm::tiny_reference_model(0);
  const auto ids = model.tokenize("abcdef");
  const std::vector<int> gold = {3};
  EXPECT_THROW(pm::forward_loss(model, ids, {2, 2}, gold, 6, "cross_entropy"), pf::IndexError);
  EXPECT_THROW(pm::forward_loss(model, ids, {2, 5}, gold, 4, "cross_entropy"), pf::IndexError);
  EXPECT_THROW(pm::forward_loss(model, ids, {0, 2}, gold, 7, "cross_entropy"), pf::IndexError);
  EXPECT_THROW(pm::forward_loss(model, ids, {0, 2}, {}, 6, "cross_entropy"), pf::IndexError);
  EXPECT_THROW(pm::forward_loss(model, ids, {0, 2}, gold, 6, "no_such_loss"), pf::RegistryError);
}

TEST(ForwardLoss, NonDifferentiableLossNamedAtBackward) {
  static const bool registered = [] {
    pf::register_loss("value_only_01", [](const Eigen::MatrixXd&, std::span<const int>) { return 1.0; });
    return true;
  }();
  (void)registered;
  auto model = pm::tiny_reference_model(0);
  const auto ids = model.tokenize("abcdef");
  const std::vector<int> gold = {3};
  try {
    pm::forward_loss(model, ids, {0, 2}, gold, 6, "value_only_01");
    FAIL();
  } catch (const pf::ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("value_only_01"), std::string::npos);
  }
}

TEST(ForwardLoss, ZeroAtCertainPrediction) {
  // An embedding table and unembedding that make the gold token overwhelmingly
  // likely: scale the gold unembedding row far along the final hidden state.
  auto base = pm::tiny_reference_model(0);
  auto w = base.network().weights();
  const auto ids = base.tokenize("abcd");
  const int gold_id = 7;
  {
    pm::TinyReferenceBackend probe(base.model(), base.tokenizer(), base.network().config(), w);
    pm::TinyTransformer<double>::Tape tape;
    probe.network().forward(probe.embed(ids), &tape);
    const Eigen::RowVectorXd h = tape.x_final.row(3).array() * tape.inv_rms_final(3) *
                                 w.final_norm.transpose().array();
    w.unembedding.row(gold_id) = h * 1e4;
  }
  pm::TinyReferenceBackend model(base.model(), base.tokenizer(), base.network().config(), w);
  const std::vector<int> gold = {gold_id};
  const auto r = pm::forward_loss(model, ids, {0, 2}, gold, 4, "cross_entropy");
  EXPECT_LT(r.loss, 1e-12);
  EXPECT_LT(r.prompt_grads.cwiseAbs().maxCoeff(), 1e-9);
}

class GradientCheck : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(GradientCheck, PromptGradientsMatchCentralDifferences) {
  const std::uint64_t seed = GetParam();
  auto model = pm::tiny_reference_model(seed);
  pf::Rng rng = pf::Rng::derived(seed, 77);
  const auto ids = random_ids(rng, 12, 64);
  const auto gold = random_ids(rng, 3, 64);
  const pm::PromptSpan span{2, 9};
  const Eigen::MatrixXd context = model.embed(ids);

  const auto r = pm::forward_loss(model, context, span, gold, ids.size(), "cross_entropy");
  const Eigen::MatrixXd prompt = context.middleRows(2, 7);
  auto f = [&](const Eigen::MatrixXd& p) {
    Eigen::MatrixXd ctx = context;
    ctx.middleRows(2, 7) = p;
    return pm::evaluate_loss(model, ctx, gold, ids.size(), "cross_entropy");
  };
  const Eigen::MatrixXd numeric = pf::testing::central_differences(f, prompt, 1e-4);
  EXPECT_LT(pf::testing::max_relative_error(r.prompt_grads, numeric, 1e-4), 1e-3);
  EXPECT_LT((r.prompt_grads - numeric).norm() / numeric.norm(), 1e-6);
}

TEST_P(GradientCheck, GradientIsFirstOrderAccurate) {
  const std::uint64_t seed = GetParam();
  auto model = pm::tiny_reference_model(seed);
  pf::Rng rng = pf::Rng::derived(seed, 91);
  const auto ids = random_ids(rng, 10, 64);
  const auto gold = random_ids(rng, 2, 64);
  const Eigen::MatrixXd context = model.embed(ids);
  const auto r = pm::forward_loss(model, context, {1, 6}, gold, ids.size(), "cross_entropy");

  Eigen::MatrixXd direction(5, 16);
  for (Eigen::Index i = 0; i < direction.size(); ++i) direction.data()[i] = rng.uniform(-1, 1);
  direction /= direction.norm();
  double previous_ratio = 0.0;
  for (double scale : {1e-3, 1e-4}) {
    Eigen::MatrixXd ctx = context;
    ctx.middleRows(1, 5) += scale * direction;
    const double actual = pm::evaluate_loss(model, ctx, gold, ids.size(), "cross_entropy") - r.loss;
    const double predicted = scale * (direction.array() * r.prompt_grads.array()).sum();
    const double ratio = std::abs(actual - predicted) / scale;
    if (previous_ratio > 0.0) EXPECT_LT(ratio, previous_ratio);
    EXPECT_LT(ratio, 1e-2);
    previous_ratio = ratio;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, GradientCheck, ::testing::Values(0u, 1u, 2u));

TEST(TinyModel, CommittedWeightsMatchSeededInitialization) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto dir = std::filesystem::path(PROMPTFORGE_SOURCE_DIR) / "models" /
                     ("tiny-reference-seed" + std::to_string(seed));
    auto loaded = pm::load_local_model(dir);
    EXPECT_TRUE(loaded->network().weights() == pm::tiny_reference_model(seed).network().weights())
        << dir;
  }
}
