// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "promptforge/core/error.hpp"
#include "promptforge/service/jobs.hpp"
#include "promptforge/service/run_store.hpp"
#include "../support/service_harness.hpp"

namespace pf = promptforge;
namespace ps = promptforge::service;
using nlohmann::json;
using pf::Method;

namespace {

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t line_count(const std::filesystem::path& p) {
  const std::string s = read_all(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override { store_ = pf_test::fresh_dir("svc"); }
  void TearDown() override { std::filesystem::remove_all(store_); }

  std::string upload(httplib::Client& c, const pf::TaskDataset& ds = pf_test::planted_dataset()) {
    int status = 0;
    const json body = pf_test::post_json(c, "/datasets", pf::dataio::to_jsonl(ds), &status, "application/x-ndjson");
    EXPECT_EQ(status, 201) << body.dump();
    return body.at("dataset_ref").get<std::string>();
  }

  std::filesystem::path store_;
};

}  // namespace

TEST_F(ServiceTest, HealthzAndUnknownRoutes) {
  pf_test::RunningServer s(store_);
  auto c = s.client();
  int status = 0;
  EXPECT_EQ(pf_test::get_json(c, "/healthz", &status), json({{"status", "ok"}}));
  EXPECT_EQ(status, 200);
  const json missing = pf_test::get_json(c, "/nope", &status);
  EXPECT_EQ(status, 404);
  EXPECT_EQ(missing["error"]["code"], "not_found");
  EXPECT_TRUE(missing["error"]["message"].is_string());
}

TEST_F(ServiceTest, OptimizerSchemasMirrorTheConfig) {
  pf_test::RunningServer s(store_);
  auto c = s.client();
  ::setenv("PROMPTFORGE_API_KEY", "k", 1);
  json schemas = pf_test::get_json(c, "/optimizers");
  EXPECT_TRUE(schemas["credentials_present"].get<bool>());
  ::unsetenv("PROMPTFORGE_API_KEY");
  schemas = pf_test::get_json(c, "/optimizers");
  EXPECT_FALSE(schemas["credentials_present"].get<bool>());

  const auto& list = schemas["optimizers"];
  ASSERT_EQ(list.size(), 5u);
  std::set<std::string> names;
  for (const auto& m : list) {
    names.insert(m["name"].get<std::string>());
    const Method method = pf::parse_method(m["name"].get<std::string>());
    const json config_keys = pf::to_json(pf::default_config(method));
    std::set<std::string> params;
    for (const auto& p : m["parameters"]) {
      const std::string name = p["name"];
      params.insert(name);
      EXPECT_TRUE(config_keys.contains(name)) << name;
      EXPECT_TRUE(p.contains("type") && p.contains("default"));
    }
    EXPECT_EQ(params.count("extraction_prompt"), method == Method::greater ? 1u : 0u);
    EXPECT_EQ(params.count("optim_model"), method == Method::greater ? 0u : 1u);
    EXPECT_EQ(m["requires_optim_model"].get<bool>(), method != Method::greater);
    EXPECT_TRUE(params.count("rounds"));
  }
  EXPECT_EQ(names, (std::set<std::string>{"ape", "apo", "pe2", "textgrad", "greater"}));
}

TEST_F(ServiceTest, DatasetUploadValidatesAndIsContentAddressed) {
  pf_test::RunningServer s(store_);
  auto c = s.client();
  const std::string a = upload(c);
  EXPECT_EQ(upload(c), a);
  int status = 0;
  json err = pf_test::post_json(c, "/datasets", "{\"question\": \"q\"}\n", &status);
  EXPECT_EQ(status, 422);
  EXPECT_EQ(err["error"]["code"], "validation_error");
  EXPECT_NE(err["error"]["field"].get<std::string>().find("line 1"), std::string::npos);
  err = pf_test::post_json(c, "/datasets", "", &status);
  EXPECT_EQ(status, 422);
}

TEST_F(ServiceTest, SubmissionErrorsNameTheField) {
  pf_test::RunningServer s(store_);
  auto c = s.client();
  const std::string ref = upload(c);
  int status = 0;

  auto body = pf_test::scripted_job(Method::ape, ref, 1);
  body["config"]["method"] = "greater";
  json err = pf_test::post_json(c, "/jobs", body.dump(), &status);
  EXPECT_EQ(status, 422);
  EXPECT_EQ(err["error"]["field"], "task_model.kind");

  body = pf_test::scripted_job(Method::ape, ref, 1);
  body["config"]["rounds"] = 0;
  err = pf_test::post_json(c, "/jobs", body.dump(), &status);
  EXPECT_EQ(status, 422);
  EXPECT_EQ(err["error"]["field"], "rounds");

  body = pf_test::scripted_job(Method::ape, ref, 1);
  body["config"]["metric"] = "bleu";
  err = pf_test::post_json(c, "/jobs", body.dump(), &status);
  EXPECT_EQ(status, 422);
  EXPECT_EQ(err["error"]["field"], "metric");

  body = pf_test::scripted_job(Method::ape, "ds-0000000000000000", 1);
  err = pf_test::post_json(c, "/jobs", body.dump(), &status);
  EXPECT_EQ(status, 404);
  EXPECT_EQ(err["error"]["code"], "not_found");

  err = pf_test::post_json(c, "/jobs", "{not json", &status);
  EXPECT_EQ(status, 400);
  EXPECT_EQ(err["error"]["code"], "bad_request");

  body = pf_test::scripted_job(Method::ape, ref, 1);
  body["priority"] = 3;
  err = pf_test::post_json(c, "/jobs", body.dump(), &status);
  EXPECT_EQ(status, 422);
  EXPECT_EQ(err["error"]["field"], "priority");

  pf_test::get_json(c, "/jobs/job-unknown", &status);
  EXPECT_EQ(status, 404);
  pf_test::post_json(c, "/jobs/job-unknown/cancel", "", &status);
  EXPECT_EQ(status, 404);
  EXPECT_TRUE(pf_test::get_json(c, "/jobs")["jobs"].empty());
}

TEST_F(ServiceTest, SubmitPollResultRoundTrip) {
  pf_test::RunningServer s(store_);
  auto c = s.client();
  const std::string ref = upload(c);
  int status = 0;
  const json submitted = pf_test::post_json(c, "/jobs", pf_test::scripted_job(Method::ape, ref, 3).dump(), &status);
  ASSERT_EQ(status, 201) << submitted.dump();
  const std::string id = submitted["job_id"];
  EXPECT_TRUE(submitted["state"] == "queued" || submitted["state"] == "running");

  const json done = pf_test::poll_job(c, id, pf_test::terminal);
  ASSERT_EQ(done["state"], "succeeded") << done.dump();
  EXPECT_EQ(done["progress"]["rounds_completed"], 3);
  EXPECT_EQ(done["progress"]["best_score"], 1.0);
  EXPECT_EQ(done["trajectory"].size(), 3u);
  EXPECT_TRUE(done["started_at"].is_string());
  EXPECT_TRUE(done["finished_at"].is_string());

  auto res = c.Get("/jobs/" + id + "/result");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto dir = store_ / "jobs" / id;
  EXPECT_EQ(res->body, read_all(dir / "result.json"));
  const auto result = pf::result_from_json(json::parse(res->body));
  EXPECT_EQ(*result.best.score, 1.0);
  EXPECT_NE(result.best.text.find(pf_test::kKeyword), std::string::npos);

  for (const char* f : {"job.json", "config.json", "dataset.jsonl", "trajectory.jsonl", "result.json", "log.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  EXPECT_EQ(line_count(dir / "trajectory.jsonl"), 3u);
  double prev = -1;
  for (const auto& line : done["trajectory"]) {
    EXPECT_GE(line["best_score"].get<double>(), prev);
    prev = line["best_score"];
  }
  pf_test::post_json(c, "/jobs/" + id + "/cancel", "", &status);
  EXPECT_EQ(status, 409);
}

TEST_F(ServiceTest, ResultBeforeSuccessIsAConflictCarryingState) {
  pf_test::RunningServer s(store_);
  auto c = s.client();
  const std::string ref = upload(c);
  const json job = pf_test::post_json(c, "/jobs", pf_test::scripted_job(Method::textgrad, ref, 5, 40).dump());
  const std::string id = job["job_id"];
  int status = 0;
  const json err = pf_test::get_json(c, "/jobs/" + id + "/result", &status);
  EXPECT_EQ(status, 409);
  EXPECT_EQ(err["error"]["code"], "conflict");
  EXPECT_TRUE(err["error"]["state"] == "queued" || err["error"]["state"] == "running");
  pf_test::post_json(c, "/jobs/" + id + "/cancel", "");
  EXPECT_EQ(pf_test::poll_job(c, id, pf_test::terminal)["state"], "cancelled");
}

TEST_F(ServiceTest, CancelDuringRoundOneLeavesAtMostOneLine) {
  pf_test::RunningServer s(store_);
  auto c = s.client();
  const std::string ref = upload(c);
  const json job = pf_test::post_json(c, "/jobs", pf_test::scripted_job(Method::ape, ref, 5, 30).dump());
  const std::string id = job["job_id"];
  pf_test::poll_job(c, id, [](const json& j) { return j["state"] == "running"; });
  int status = 0;
  const json cancelled = pf_test::post_json(c, "/jobs/" + id + "/cancel", "", &status);
  EXPECT_EQ(status, 200);
  EXPECT_TRUE(cancelled["cancel_requested"].get<bool>());
  const json done = pf_test::poll_job(c, id, pf_test::terminal);
  EXPECT_EQ(done["state"], "cancelled");
  EXPECT_LE(done["trajectory"].size(), 1u);
  EXPECT_FALSE(std::filesystem::exists(store_ / "jobs" / id / "result.json"));
}

TEST_F(ServiceTest, QueuedJobsCancelWithoutStartingAndRunFifo) {
  pf_test::RunningServer s(store_, 1);
  auto c = s.client();
  const std::string ref = upload(c);
  std::vector<std::string> ids;
  for (int i = 0; i < 3; ++i) {
    ids.push_back(pf_test::post_json(c, "/jobs", pf_test::scripted_job(Method::textgrad, ref, 2, 15).dump())["job_id"]);
  }
  const std::string extra = pf_test::post_json(c, "/jobs", pf_test::scripted_job(Method::pe2, ref, 1).dump())["job_id"];
  const json cancelled = pf_test::post_json(c, "/jobs/" + extra + "/cancel", "");
  EXPECT_EQ(cancelled["state"], "cancelled");
  EXPECT_TRUE(cancelled["started_at"].is_null());

  // with one worker, a later job never runs while an earlier one waits
  while (true) {
    std::vector<std::string> states;
    for (const auto& id : ids) states.push_back(pf_test::get_json(c, "/jobs/" + id)["state"]);
    for (std::size_t i = 0; i < states.size(); ++i) {
      for (std::size_t j = i + 1; j < states.size(); ++j) {
        EXPECT_FALSE(states[i] == "queued" && states[j] != "queued") << i << " " << j;
      }
    }
    if (states.back() == "succeeded") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  std::vector<std::string> starts;
  for (const auto& id : ids) {
    const json j = pf_test::get_json(c, "/jobs/" + id);
    EXPECT_EQ(j["state"], "succeeded");
    starts.push_back(j["started_at"]);
  }
  EXPECT_TRUE(std::is_sorted(starts.begin(), starts.end()));
  EXPECT_EQ(pf_test::get_json(c, "/jobs/" + extra)["state"], "cancelled");
  EXPECT_FALSE(std::filesystem::exists(store_ / "jobs" / extra / "result.json"));
}

TEST_F(ServiceTest, BootScanFailsInterruptedJobsAndRequeuesQueuedOnes) {
  const auto ds = pf_test::planted_dataset();
  {
    ps::RunStore store(store_);
    const std::string ref = store.put_dataset(pf::dataio::to_jsonl(ds));
    ps::Job running;
    running.id = "job-interrupted";
    running.sequence = 1;
    running.state = ps::JobState::running;
    running.config = pf_test::scripted_config(Method::ape, 1);
    running.dataset_ref = ref;
    running.created_at = ps::utc_now();
    store.create_job(running, ds);
    store.append_trajectory(running.id, pf::trajectory_line(1, 0.0, "p"));
    ps::Job queued = running;
    queued.id = "job-waiting";
    queued.sequence = 2;
    queued.state = ps::JobState::queued;
    store.create_job(queued, ds);
  }
  pf_test::RunningServer s(store_);
  auto c = s.client();
  const json failed = pf_test::get_json(c, "/jobs/job-interrupted");
  EXPECT_EQ(failed["state"], "failed");
  EXPECT_EQ(failed["error"], "interrupted");
  EXPECT_EQ(failed["trajectory"].size(), 1u);
  EXPECT_EQ(pf_test::poll_job(c, "job-waiting", pf_test::terminal)["state"], "succeeded");
  // new submissions continue the sequence
  const std::string ref = upload(c);
  const json fresh = pf_test::post_json(c, "/jobs", pf_test::scripted_job(Method::pe2, ref, 1).dump());
  EXPECT_EQ(fresh["sequence"], 3);
}

TEST_F(ServiceTest, FailedJobsRecordTheError) {
  pf_test::RunningServer s(store_);
  auto c = s.client();
  const std::string ref = upload(c);
  auto body = pf_test::scripted_job(Method::textgrad, ref, 1);
  body["config"]["optim_model"]["options"]["fail_always"] = true;
  const std::string id = pf_test::post_json(c, "/jobs", body.dump())["job_id"];
  const json done = pf_test::poll_job(c, id, pf_test::terminal);
  EXPECT_EQ(done["state"], "failed");
  EXPECT_NE(done["error"].get<std::string>().find("optimizer"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(store_ / "jobs" / id / "result.json"));
  EXPECT_FALSE(read_all(store_ / "jobs" / id / "log.txt").empty());
}

TEST_F(ServiceTest, UnwritableStoreAndBusyPort) {
  EXPECT_THROW(ps::RunStore("/dev/null/store"), pf::IoError);
  pf_test::RunningServer s(store_);
  ps::ServerOptions options;
  options.store_root = store_ / "second";
  options.port = s.port();
  ps::Server second(options);
  EXPECT_THROW(second.bind(), pf::IoError);
}

TEST(ServiceOptions, EnvironmentOverrides) {
  ::setenv("PROMPTFORGE_STORE", "/tmp/pf-env-store", 1);
  ::setenv("PROMPTFORGE_PORT", "9123", 1);
  const auto o = ps::options_from_env();
  EXPECT_EQ(o.store_root, "/tmp/pf-env-store");
  EXPECT_EQ(o.port, 9123);
  ::setenv("PROMPTFORGE_PORT", "http", 1);
  EXPECT_THROW(ps::options_from_env(), pf::ValidationError);
  ::unsetenv("PROMPTFORGE_STORE");
  ::unsetenv("PROMPTFORGE_PORT");
}

TEST(JobJson, RoundTrips) {
  ps::Job job;
  job.id = "job-1";
  job.sequence = 4;
  job.state = ps::JobState::failed;
  job.config = pf_test::scripted_config(Method::apo, 2);
  job.dataset_ref = "ds-1";
  job.p_init = "p";
  job.created_at = ps::utc_now();
  job.started_at = job.created_at;
  job.progress = {2, 0.5};
  job.error = "boom";
  const ps::Job back = ps::job_from_json(ps::to_json(job));
  EXPECT_EQ(ps::to_json(back), ps::to_json(job));
}
