// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "promptforge/core/error.hpp"
#include "promptforge/dataio/dataset_io.hpp"
#include "promptforge/models/client.hpp"

// After Eigen: <resolv.h>, pulled in by httplib, defines a `_res` macro that
// collides with Eigen parameter names.
#include <httplib.h>

namespace pf = promptforge;
namespace pm = promptforge::models;
using nlohmann::json;

namespace {

pf::ModelRef mock(const std::string& behavior, json options = json::object()) {
  pf::ModelRef m;
  m.identifier = "mock:" + behavior;
  m.options = std::move(options);
  return m;
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    if (value) {
      ::setenv(name, value, 1);
    } else {
      ::unsetenv(name);
    }
  }
  ~ScopedEnv() {
    if (old_) {
      ::setenv(name_, old_->c_str(), 1);
    } else {
      ::unsetenv(name_);
    }
  }

 private:
  const char* name_;
  std::optional<std::string> old_;
};

}  // namespace

TEST(ScriptedMock, EchoReturnsUserText) {
  auto c = pm::make_client(mock("echo"));
  EXPECT_EQ(c->transport(), pm::Transport::scripted_mock);
  EXPECT_EQ(pm::generate(*c, std::nullopt, "hello", {}), "hello");
  EXPECT_EQ(c->calls(), 1u);
}

TEST(ScriptedMock, CannedTableWithFallback) {
  auto c = pm::make_client(mock("canned", {{"table", {{"ping", "pong"}}}, {"fallback", "?"}}));
  EXPECT_EQ(c->generate(std::nullopt, "ping", {}), "pong");
  EXPECT_EQ(c->generate(std::nullopt, "pong", {}), "?");
}

TEST(ScriptedMock, PlantedKeywordAnswersOnlyWithKeyword) {
  auto c = pm::make_client(mock("planted", {{"keyword", "stepwise"}, {"gold", "24"}}));
  EXPECT_EQ(c->generate(std::nullopt, "q\nsolve it stepwise\n", {}), "24");
  EXPECT_EQ(c->generate(std::nullopt, "q\nsolve it\n", {}), "0");
}

TEST(ScriptedMock, PlantedKeywordIgnoresKeywordInsideQuestion) {
  const auto ds = pf::dataio::from_records(
      {json{{"question", "is stepwise a word?"}, {"prompt", ""}, {"answer", "yes"}},
       json{{"question", "2+2"}, {"prompt", ""}, {"answer", "4"}}});
  auto c = pm::make_client(mock("planted", {{"keyword", "stepwise"}, {"answers", "dataset"}}),
                           {&ds});
  EXPECT_EQ(c->generate(std::nullopt, "is stepwise a word?\nanswer\n", {}), "0");
  EXPECT_EQ(c->generate(std::nullopt, "is stepwise a word?\nanswer stepwise\n", {}), "yes");
  EXPECT_EQ(c->generate(std::nullopt, "2+2\nstepwise\n", {}), "4");
}

TEST(ScriptedMock, SequenceAndRoutesKeepIndependentCursors) {
  auto c = pm::make_client(mock(
      "sequence", {{"responses", {"a", "b"}},
                   {"routes", json::array({{{"when", "CRITIQUE"}, {"responses", {"c1", "c2"}}}})}}));
  EXPECT_EQ(c->generate(std::nullopt, "x", {}), "a");
  EXPECT_EQ(c->generate(std::nullopt, "CRITIQUE this", {}), "c1");
  EXPECT_EQ(c->generate(std::nullopt, "y", {}), "b");
  EXPECT_EQ(c->generate(std::nullopt, "z", {}), "b");
  EXPECT_EQ(c->generate(std::nullopt, "CRITIQUE", {}), "c2");
}

TEST(ScriptedMock, CycleWrapsAround) {
  auto c = pm::make_client(mock("sequence", {{"responses", {"a", "b"}}, {"cycle", true}}));
  std::string got;
  for (int i = 0; i < 5; ++i) got += c->generate(std::nullopt, "", {});
  EXPECT_EQ(got, "ababa");
}

TEST(ScriptedMock, FailureInjectionThrowsTransportError) {
  auto c = pm::make_client(mock("echo", {{"fail_first", 2}}));
  EXPECT_THROW(c->generate(std::nullopt, "a", {}), pf::TransportError);
  EXPECT_THROW(c->generate(std::nullopt, "a", {}), pf::TransportError);
  EXPECT_EQ(c->generate(std::nullopt, "a", {}), "a");
  EXPECT_EQ(c->calls(), 3u);
}

TEST(ScriptedMock, RejectsUnknownBehaviorAndOptions) {
  EXPECT_THROW(pm::make_client(mock("oracle")), pf::ValidationError);
  EXPECT_THROW(pm::make_client(mock("echo", {{"tabel", 1}})), pf::ValidationError);
  EXPECT_THROW(pm::make_client(mock("planted", {{"gold", "1"}})), pf::ValidationError);
}

TEST(Generate, StripsAtEarliestStopSequence) {
  EXPECT_EQ(pm::strip_at_stop("abc\nSTOP def", {"STOP", "\n"}), "abc");
  EXPECT_EQ(pm::strip_at_stop("abc", {""}), "abc");
  auto c = pm::make_client(mock("echo"));
  pf::GenerationParams p;
  p.stop_sequences = {"###"};
  EXPECT_EQ(c->generate(std::nullopt, "keep###drop", p), "keep");
  EXPECT_EQ(c->generate(std::nullopt, "", p), "");
}

TEST(LocalRuntime, DeterministicGreedyGeneration) {
  pf::ModelRef m;
  m.kind = pf::ModelKind::local;
  m.identifier = std::string(PROMPTFORGE_SOURCE_DIR) + "/models/tiny-reference-seed0";
  auto a = pm::make_client(m);
  auto b = pm::make_client(m);
  pf::GenerationParams p;
  p.max_new_tokens = 16;
  EXPECT_EQ(a->transport(), pm::Transport::local_runtime);
  const auto out = a->generate(std::nullopt, "what is 1+1?\n", p);
  EXPECT_EQ(out, b->generate(std::nullopt, "what is 1+1?\n", p));
  EXPECT_LE(out.size(), 16u);
}

TEST(LocalRuntime, MissingWeightsDirectoryIsIoError) {
  pf::ModelRef m;
  m.kind = pf::ModelKind::local;
  m.identifier = "/nonexistent/weights";
  EXPECT_THROW(pm::make_client(m), pf::IoError);
}

TEST(HttpChat, MissingKeyIsConfigurationErrorNamingVariable) {
  ScopedEnv key("PROMPTFORGE_API_KEY", nullptr);
  pf::ModelRef m;
  m.identifier = "gpt-test";
  try {
    pm::make_client(m);
    FAIL();
  } catch (const pf::ConfigurationError& e) {
    EXPECT_EQ(e.variable(), "PROMPTFORGE_API_KEY");
    EXPECT_NE(std::string(e.what()).find("PROMPTFORGE_API_KEY"), std::string::npos);
  }
}

class FakeChatServer : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++hits_;
      last_body_ = json::parse(req.body);
      last_auth_ = req.get_header_value("Authorization");
      if (n <= fail_count_) {
        res.status = 503;
        return;
      }
      res.set_content(json{{"choices", {{{"message", {{"content", reply_}}}}}}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  pf::ModelRef model() const {
    pf::ModelRef m;
    m.identifier = "fake-model";
    m.options = {{"retry_base_ms", 1}};
    return m;
  }
  std::string base() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  int fail_count_ = 0;
  std::string reply_ = "hello from server STOP tail";
  json last_body_;
  std::string last_auth_;
};

TEST_F(FakeChatServer, SendsChatRequestAndStripsStop) {
  ScopedEnv key("PROMPTFORGE_API_KEY", "sk-test");
  ScopedEnv api(("PROMPTFORGE_API_BASE"), base().c_str());
  auto c = pm::make_client(model());
  pf::GenerationParams p;
  p.stop_sequences = {" STOP"};
  p.max_new_tokens = 7;
  EXPECT_EQ(c->generate(std::string("sys"), "usr", p), "hello from server");
  EXPECT_EQ(last_auth_, "Bearer sk-test");
  EXPECT_EQ(last_body_["model"], "fake-model");
  EXPECT_EQ(last_body_["max_tokens"], 7);
  EXPECT_EQ(last_body_["messages"][0]["role"], "system");
  EXPECT_EQ(last_body_["messages"][1]["content"], "usr");
}

TEST_F(FakeChatServer, RetriesTransientFailures) {
  ScopedEnv key("PROMPTFORGE_API_KEY", "sk-test");
  ScopedEnv api("PROMPTFORGE_API_BASE", base().c_str());
  fail_count_ = 2;
  reply_ = "ok";
  auto c = pm::make_client(model());
  EXPECT_EQ(c->generate(std::nullopt, "u", {}), "ok");
  EXPECT_EQ(hits_.load(), 3);
}

TEST_F(FakeChatServer, GivesUpAfterThreeAttempts) {
  ScopedEnv key("PROMPTFORGE_API_KEY", "sk-test");
  ScopedEnv api("PROMPTFORGE_API_BASE", base().c_str());
  fail_count_ = 10;
  auto c = pm::make_client(model());
  try {
    c->generate(std::nullopt, "u", {});
    FAIL();
  } catch (const pf::TransportError& e) {
    EXPECT_EQ(e.attempts(), 3);
    EXPECT_TRUE(e.retriable());
  }
  EXPECT_EQ(hits_.load(), 3);
}

TEST(HttpChatUnreachable, ConnectionFailureIsRetriableTransportError) {
  ScopedEnv key("PROMPTFORGE_API_KEY", "sk-test");
  ScopedEnv api("PROMPTFORGE_API_BASE", "http://127.0.0.1:1/v1");
  pf::ModelRef m;
  m.identifier = "x";
  m.options = {{"retry_base_ms", 1}, {"timeout_s", 1}};
  auto c = pm::make_client(m);
  EXPECT_THROW(c->generate(std::nullopt, "u", {}), pf::TransportError);
}
