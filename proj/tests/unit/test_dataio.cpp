// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "promptforge/core/error.hpp"
#include "promptforge/dataio/dataset_io.hpp"

namespace pf = promptforge;
namespace pd = promptforge::dataio;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / ("pf_dataio_" + name);
  std::ofstream(p, std::ios::binary) << content;
  return p;
}

std::string error_field(const std::string& content) {
  try {
    pd::parse_jsonl(content);
  } catch (const pf::ValidationError& e) {
    return e.field();
  }
  return "<ok>";
}

}  // namespace

TEST(LoadJsonl, ArithmeticFixture) {
  const auto ds = pd::load_jsonl(fs::path(PROMPTFORGE_SOURCE_DIR) / "tests/fixtures/arithmetic.jsonl");
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds[0].answer, "24");
  EXPECT_EQ(ds[1].answer, "63");
  EXPECT_EQ(ds[0].id, "0");
  EXPECT_EQ(ds[0].question, "((-1 + 2 + 9 * 5) - (-2 + -4 + -4 * -7)) =");
  EXPECT_EQ(ds[0].prompt, "Use logical reasoning and think step by step.");
}

TEST(LoadJsonl, MissingFileIsIoError) {
  EXPECT_THROW(pd::load_jsonl("/nonexistent/data.jsonl"), pf::IoError);
}

TEST(LoadJsonl, EmptyFileRejected) {
  const auto p = temp_file("empty.jsonl", "\n\n");
  try {
    pd::load_jsonl(p);
    FAIL();
  } catch (const pf::ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("dataset contains no examples"), std::string::npos);
  }
}

TEST(LoadJsonl, ErrorsNameLineAndKey) {
  const std::string ok = R"({"question":"q","prompt":"p","answer":"a"})";
  EXPECT_EQ(error_field(ok + "\n" + R"({"question":"q","prompt":"p"})" + "\n" + ok), "line 2: answer");
  EXPECT_EQ(error_field(ok + "\n\n{not json\n"), "line 3");
  EXPECT_EQ(error_field(R"({"question":"  ","prompt":"p","answer":"a"})"), "line 1: question");
  EXPECT_EQ(error_field(R"({"question":"q","prompt":3,"answer":"a"})"), "line 1: prompt");
  EXPECT_EQ(error_field(R"([1,2])"), "line 1");
}

TEST(LoadJsonl, IdsExtrasAndLineEndings) {
  const auto ds = pd::parse_jsonl(
      "\xEF\xBB\xBF{\"question\":\"q\",\"prompt\":\"\",\"answer\":\"a\\n\",\"id\":7,\"src\":\"bbh\"}\r\n"
      "{\"question\":\"q2\",\"prompt\":\"p\",\"answer\":\" b \"}\r\n");
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds[0].id, "7");
  EXPECT_EQ(ds[0].answer, "a");
  EXPECT_EQ(ds[0].extras["src"], "bbh");
  EXPECT_EQ(ds[1].id, "1");
  EXPECT_EQ(ds[1].answer, " b ");
}

TEST(LoadJsonl, DuplicateQuestionsAllowedDuplicateIdsNot) {
  EXPECT_NO_THROW(pd::parse_jsonl("{\"question\":\"q\",\"prompt\":\"\",\"answer\":\"a\"}\n"
                                  "{\"question\":\"q\",\"prompt\":\"\",\"answer\":\"a\"}\n"));
  EXPECT_THROW(pd::parse_jsonl("{\"id\":\"x\",\"question\":\"q\",\"prompt\":\"\",\"answer\":\"a\"}\n"
                               "{\"id\":\"x\",\"question\":\"r\",\"prompt\":\"\",\"answer\":\"a\"}\n"),
               pf::ValidationError);
}

TEST(FromRecords, ManualRecordsInOrder) {
  const auto ds = pd::from_records(
      {json{{"question", "((-1 + 2 + 9 * 5) - (-2 + -4 + -4 * -7)) ="},
            {"prompt", "Use logical reasoning and think step by step."},
            {"answer", "24"}},
       json{{"question", "((-9 * -5 - 6 + -2) - (-8 - -6 * -3 * 1)) ="},
            {"prompt", "Use logical reasoning and think step by step."},
            {"answer", "63"}}});
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds[0].answer, "24");
  EXPECT_EQ(ds[1].answer, "63");
}

TEST(FromRecords, EmptyAndSchemaErrorsKeyedByRecord) {
  EXPECT_THROW(pd::from_records({}), pf::ValidationError);
  EXPECT_NO_THROW(pd::from_records({json{{"question", "q"}, {"prompt", ""}, {"answer", "a"}}}));
  try {
    pd::from_records({json{{"question", "q"}, {"prompt", ""}, {"answer", "a"}},
                      json{{"question", "q"}, {"answer", "a"}}});
    FAIL();
  } catch (const pf::ValidationError& e) {
    EXPECT_EQ(e.field(), "record 1: prompt");
  }
}

TEST(SaveJsonl, RoundTripUnicodeAndOrder) {
  std::vector<json> recs;
  for (int i = 0; i < 1000; ++i) {
    recs.push_back({{"question", "∑ x_" + std::to_string(i) + " ≤ π?"},
                    {"prompt", i % 2 ? "" : "think ✓"},
                    {"answer", std::to_string(i)}});
  }
  const auto ds = pd::from_records(recs);
  const auto p = fs::temp_directory_path() / "pf_dataio_roundtrip.jsonl";
  pd::save_jsonl(ds, p);
  const auto back = pd::load_jsonl(p);
  ASSERT_EQ(back.size(), 1000u);
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, std::to_string(i));
    EXPECT_EQ(back[i].question, ds[i].question);
    EXPECT_EQ(back[i].prompt, ds[i].prompt);
    EXPECT_EQ(back[i].answer, ds[i].answer);
  }
  EXPECT_EQ(pd::to_jsonl(back), pd::to_jsonl(ds));
}

TEST(SaveJsonl, UnwritablePathIsIoError) {
  const auto ds = pd::from_records({json{{"question", "q"}, {"prompt", ""}, {"answer", "a"}}});
  EXPECT_THROW(pd::save_jsonl(ds, "/nonexistent/dir/out.jsonl"), pf::IoError);
}
