// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numeric>

#include "../support/oracles.hpp"
#include "promptforge/core/error.hpp"
#include "promptforge/core/random.hpp"
#include "promptforge/dataio/dataset_io.hpp"
#include "promptforge/eval/harness.hpp"
#include "promptforge/eval/metrics.hpp"

namespace pf = promptforge;
namespace pe = promptforge::eval;
namespace pm = promptforge::models;
using nlohmann::json;

namespace {

pf::TaskDataset four_examples() {
  std::vector<json> recs;
  for (int i = 0; i < 4; ++i) {
    recs.push_back({{"question", "what is " + std::to_string(i) + "+" + std::to_string(i) + "?"},
                    {"prompt", ""},
                    {"answer", std::to_string(2 * i)}});
  }
  return pf::dataio::from_records(recs, "four");
}

std::unique_ptr<pm::GenerativeClient> planted(const pf::TaskDataset& ds, json extra = json::object()) {
  pf::ModelRef m;
  m.identifier = "mock:planted";
  m.options = {{"keyword", "stepwise"}, {"answers", "dataset"}};
  m.options.update(extra);
  return pm::make_client(m, {&ds});
}

}  // namespace

TEST(Extraction, LastNumberExamples) {
  const auto spec = pe::ExtractionSpec::last_number();
  EXPECT_EQ(pe::extract_answer("so the total is 24.", spec), "24");
  EXPECT_EQ(pe::extract_answer("no numbers here", spec), "");
  EXPECT_EQ(pe::extract_answer("from 3 to -1,250.5 units", spec), "-1250.5");
}

TEST(Extraction, LastNumberMatchesReferenceScanner) {
  pf::Rng rng(11);
  const std::string alphabet = "0123456789.,- ab";
  for (int trial = 0; trial < 5000; ++trial) {
    std::string s;
    const std::size_t n = rng.index(20);
    for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[rng.index(alphabet.size())]);
    EXPECT_EQ(pe::extract_answer(s, pe::ExtractionSpec::last_number()),
              pf::testing::last_number_reference(s))
        << "input: '" << s << "'";
  }
}

TEST(Extraction, RegexFirstCaptureGroup) {
  const auto spec = pe::ExtractionSpec::regex(R"(answer is (\w+))");
  EXPECT_EQ(pe::extract_answer("the answer is Yes", spec), "Yes");
  EXPECT_EQ(pe::extract_answer("nothing", spec), "");
}

TEST(Extraction, RegexValidatedAtConstruction) {
  EXPECT_THROW(pe::ExtractionSpec::regex("(unclosed"), pf::ValidationError);
  EXPECT_THROW(pe::ExtractionSpec::regex("no groups"), pf::ValidationError);
  EXPECT_THROW(pe::ExtractionSpec::regex("(a)(b)"), pf::ValidationError);
  EXPECT_NO_THROW(pe::ExtractionSpec::regex("(?:x)(y)"));
}

TEST(Extraction, WholeOutputAndExtractionPrompt) {
  EXPECT_EQ(pe::extract_answer("  42 \n", pe::ExtractionSpec::whole_output()), "42");
  const std::string long_text(200000, 'x');
  EXPECT_EQ(pe::extract_answer(long_text, pe::ExtractionSpec::whole_output()).size(), 200000u);
  const auto ep = pe::ExtractionSpec::extraction_prompt("the answer is ");
  EXPECT_EQ(pe::extract_answer(" 24 \nmore text", ep), "24");
  EXPECT_THROW(pe::ExtractionSpec::extraction_prompt("  "), pf::ValidationError);
}

TEST(Extraction, PureFunction) {
  const auto spec = pe::ExtractionSpec::last_number();
  EXPECT_EQ(pe::extract_answer("a 1 b 2", spec), pe::extract_answer("a 1 b 2", spec));
}

TEST(Metrics, ExactMatchNormalization) {
  EXPECT_EQ(pe::exact_match("24", "24"), 1.0);
  EXPECT_EQ(pe::exact_match(" Yes", "yes"), 1.0);
  EXPECT_EQ(pe::exact_match("23", "24"), 0.0);
  EXPECT_EQ(pe::exact_match("24.0", "24"), 0.0);
}

TEST(Metrics, NumericMatch) {
  EXPECT_EQ(pe::numeric_match("24.0", "24", 1e-6), 1.0);
  EXPECT_EQ(pe::numeric_match("1,000", "1000", 1e-6), 1.0);
  EXPECT_EQ(pe::numeric_match("abc", "1", 1e-6), 0.0);
  EXPECT_FALSE(pe::parse_number("12abc").has_value());
}

TEST(ScorePrompt, PlantedKeywordScores) {
  const auto ds = four_examples();
  auto client = planted(ds);
  const auto spec = pe::ExtractionSpec::whole_output();
  const auto hit = pe::score_prompt("solve it stepwise", ds, *client, spec, "exact_match");
  EXPECT_EQ(hit.score, 1.0);
  ASSERT_EQ(hit.records.size(), 4u);
  EXPECT_EQ(hit.records[2].example_id, "2");
  const auto miss = pe::score_prompt("solve it", ds, *client, spec, "exact_match");
  EXPECT_EQ(miss.score, 0.25);  // question 0 has gold "0", the mock's wrong answer
}

TEST(ScorePrompt, SubsetKeepsDatasetOrder) {
  const auto ds = four_examples();
  auto client = planted(ds);
  const std::vector<std::string> ids = {"3", "1"};
  const auto r = pe::score_prompt("stepwise", ds, *client, pe::ExtractionSpec::whole_output(),
                                  "exact_match", ids);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0].example_id, "1");
  EXPECT_EQ(r.records[1].example_id, "3");
  EXPECT_EQ(client->calls(), 2u);
  const std::vector<std::string> bad = {"9"};
  EXPECT_THROW(pe::score_prompt("x", ds, *client, pe::ExtractionSpec::whole_output(), "exact_match", bad),
               pf::ValidationError);
}

TEST(ScorePrompt, ScoreIsExactlyMeanOfRecords) {
  const auto ds = four_examples();
  auto client = planted(ds, {{"fail_first", 1}});
  const auto r = pe::score_prompt("stepwise", ds, *client, pe::ExtractionSpec::whole_output(), "exact_match");
  EXPECT_EQ(r.failures, 1u);
  EXPECT_TRUE(r.records[0].error.has_value());
  EXPECT_EQ(r.records[0].metric_value, 0.0);
  double sum = 0.0;
  for (const auto& rec : r.records) sum += rec.metric_value;
  EXPECT_EQ(r.score, sum / 4.0);
}

TEST(ScorePrompt, AllFailingIsRunError) {
  const auto ds = four_examples();
  auto client = planted(ds, {{"fail_always", true}});
  EXPECT_THROW(pe::score_prompt("stepwise", ds, *client, pe::ExtractionSpec::whole_output(), "exact_match"),
               pf::RunError);
}

TEST(ScorePrompt, ParallelWorkersMatchSequential) {
  std::vector<json> recs;
  for (int i = 0; i < 37; ++i) {
    recs.push_back({{"question", "q" + std::to_string(i)}, {"prompt", ""}, {"answer", "q" + std::to_string(i)}});
  }
  const auto ds = pf::dataio::from_records(recs);
  pf::ModelRef m;
  m.identifier = "mock:echo";
  auto client = pm::make_client(m);
  pe::ScoreOptions seq, par;
  par.workers = 6;
  const auto spec = pe::ExtractionSpec::regex(R"(^(\S+))");
  const auto a = pe::score_prompt("p", ds, *client, spec, "exact_match", std::nullopt, seq);
  const auto b = pe::score_prompt("p", ds, *client, spec, "exact_match", std::nullopt, par);
  EXPECT_EQ(a.score, 1.0);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].example_id, b.records[i].example_id);
    EXPECT_EQ(a.records[i].raw_output, b.records[i].raw_output);
  }
}

TEST(ScorePrompt, ExtractionPromptModeReadsContinuation) {
  const auto ds = pf::dataio::from_records({json{{"question", "q"}, {"prompt", ""}, {"answer", "7"}}});
  pf::ModelRef m;
  m.identifier = "mock:canned";
  m.options = {{"table", {{"q\np\n", "reasoning here"}, {"q\np\nreasoning here\nanswer: ", "7\nextra"}}}};
  auto client = pm::make_client(m);
  const auto r = pe::score_prompt("p", ds, *client, pe::ExtractionSpec::extraction_prompt("answer: "),
                                  "exact_match");
  EXPECT_EQ(r.score, 1.0);
  EXPECT_EQ(r.records[0].raw_output, "reasoning here");
  EXPECT_EQ(r.records[0].extracted_answer, "7");
  EXPECT_EQ(client->calls(), 2u);
}

TEST(ScorePrompt, UnknownMetricIsRegistryError) {
  const auto ds = four_examples();
  auto client = planted(ds);
  EXPECT_THROW(pe::score_prompt("x", ds, *client, pe::ExtractionSpec::whole_output(), "bleu"),
               pf::RegistryError);
}

TEST(Minibatch, SeededAndWithoutReplacement) {
  std::vector<json> recs;
  for (int i = 0; i < 30; ++i) recs.push_back({{"question", "q"}, {"prompt", ""}, {"answer", "a"}});
  const auto ds = pf::dataio::from_records(recs);
  const auto a = pe::sample_minibatch(ds, 8, 3);
  EXPECT_EQ(a, pe::sample_minibatch(ds, 8, 3));
  EXPECT_NE(a, pe::sample_minibatch(ds, 8, 4));
  EXPECT_EQ(std::set<std::string>(a.begin(), a.end()).size(), 8u);
  EXPECT_EQ(pe::sample_minibatch(ds, 100, 3).size(), 30u);
}
