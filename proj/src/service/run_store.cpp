// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/service/run_store.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "promptforge/core/error.hpp"
#include "promptforge/core/json_io.hpp"
#include "promptforge/dataio/dataset_io.hpp"

namespace promptforge::service {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::queued: return "queued";
    case JobState::running: return "running";
    case JobState::succeeded: return "succeeded";
    case JobState::failed: return "failed";
    case JobState::cancelled: return "cancelled";
  }
  return "unknown";
}

JobState parse_job_state(std::string_view s) {
  for (JobState st : {JobState::queued, JobState::running, JobState::succeeded, JobState::failed,
                      JobState::cancelled}) {
    if (to_string(st) == s) return st;
  }
  throw ValidationError("state", "unknown job state '" + std::string(s) + "'");
}

bool is_terminal(JobState s) noexcept {
  return s == JobState::succeeded || s == JobState::failed || s == JobState::cancelled;
}

namespace {

json opt(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::string> opt_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool valid_ref(const std::string& s) {
  if (s.empty() || s.size() > 64) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) return false;
  }
  return true;
}

}  // namespace

json to_json(const Job& job) {
  return json{{"job_id", job.id},
              {"sequence", job.sequence},
              {"state", to_string(job.state)},
              {"config", promptforge::to_json(job.config)},
              {"dataset_ref", job.dataset_ref},
              {"p_init", opt(job.p_init)},
              {"created_at", job.created_at},
              {"started_at", opt(job.started_at)},
              {"finished_at", opt(job.finished_at)},
              {"progress",
               {{"rounds_completed", job.progress.rounds_completed},
                {"best_score", job.progress.best_score ? json(*job.progress.best_score) : json(nullptr)}}},
              {"error", opt(job.error)},
              {"cancel_requested", job.cancel_requested}};
}

Job job_from_json(const json& j) {
  Job job;
  job.id = j.at("job_id").get<std::string>();
  job.sequence = j.value("sequence", std::uint64_t{0});
  job.state = parse_job_state(j.at("state").get<std::string>());
  job.config = config_from_json(j.at("config"));
  job.dataset_ref = j.at("dataset_ref").get<std::string>();
  job.p_init = opt_string(j, "p_init");
  job.created_at = j.value("created_at", std::string());
  job.started_at = opt_string(j, "started_at");
  job.finished_at = opt_string(j, "finished_at");
  if (j.contains("progress")) {
    const auto& p = j.at("progress");
    job.progress.rounds_completed = p.value("rounds_completed", 0);
    if (p.contains("best_score") && !p.at("best_score").is_null()) job.progress.best_score = p.at("best_score").get<double>();
  }
  job.error = opt_string(j, "error");
  job.cancel_requested = j.value("cancel_requested", false);
  return job;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  const std::size_t n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  std::snprintf(buf + n, sizeof buf - n, ".%03dZ", static_cast<int>(ms));
  return buf;
}

void write_atomic(const fs::path& path, std::string_view content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

RunStore::RunStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "datasets", ec);
  if (!ec) fs::create_directories(root_ / "jobs", ec);
  if (ec) throw IoError("cannot create run store at " + root_.string() + ": " + ec.message());
  // Probe writability up front rather than at the first submission.
  const fs::path probe = root_ / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out || !(out << "ok")) throw IoError("run store " + root_.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

std::mutex& RunStore::lock_for(const std::string& id) {
  std::lock_guard lock(locks_mutex_);
  auto& m = locks_[id];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

std::string RunStore::put_dataset(std::string_view jsonl) {
  const TaskDataset parsed = dataio::parse_jsonl(jsonl, "upload");
  char buf[24];
  std::snprintf(buf, sizeof buf, "ds-%016llx", static_cast<unsigned long long>(fnv1a(jsonl)));
  const std::string ref = buf;
  const fs::path path = root_ / "datasets" / (ref + ".jsonl");
  std::lock_guard lock(lock_for(ref));
  if (!fs::exists(path)) write_atomic(path, jsonl);
  (void)parsed;
  return ref;
}

bool RunStore::has_dataset(const std::string& ref) const {
  return valid_ref(ref) && fs::exists(root_ / "datasets" / (ref + ".jsonl"));
}

TaskDataset RunStore::load_dataset(const std::string& ref) const {
  if (!has_dataset(ref)) throw NotFoundError("unknown dataset '" + ref + "'");
  return dataio::parse_jsonl(read_file(root_ / "datasets" / (ref + ".jsonl")), ref);
}

fs::path RunStore::job_dir(const std::string& id) const {
  if (!valid_ref(id)) throw NotFoundError("unknown job '" + id + "'");
  return root_ / "jobs" / id;
}

void RunStore::create_job(const Job& job, const TaskDataset& dataset) {
  const fs::path dir = job_dir(job.id);
  std::lock_guard lock(lock_for(job.id));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_atomic(dir / "config.json", promptforge::to_json(job.config).dump(2) + "\n");
  write_atomic(dir / "dataset.jsonl", dataio::to_jsonl(dataset));
  write_atomic(dir / "trajectory.jsonl", "");
  write_atomic(dir / "log.txt", "");
  // job.json last: its presence marks the directory as a complete job
  write_atomic(dir / "job.json", to_json(job).dump(2) + "\n");
}

void RunStore::save_job(const Job& job) {
  std::lock_guard lock(lock_for(job.id));
  write_atomic(job_dir(job.id) / "job.json", to_json(job).dump(2) + "\n");
}

Job RunStore::load_job(const std::string& id) const {
  const fs::path path = job_dir(id) / "job.json";
  if (!fs::exists(path)) throw NotFoundError("unknown job '" + id + "'");
  try {
    return job_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw IoError("corrupt " + path.string() + ": " + e.what());
  }
}

std::vector<Job> RunStore::list_jobs() const {
  std::vector<Job> jobs;
  for (const auto& entry : fs::directory_iterator(root_ / "jobs")) {
    if (!entry.is_directory() || !fs::exists(entry.path() / "job.json")) continue;
    jobs.push_back(load_job(entry.path().filename().string()));
  }
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) { return a.sequence < b.sequence; });
  return jobs;
}

TaskDataset RunStore::job_dataset(const std::string& id) const {
  return dataio::parse_jsonl(read_file(job_dir(id) / "dataset.jsonl"), id);
}

void RunStore::append_trajectory(const std::string& id, const json& line) {
  std::lock_guard lock(lock_for(id));
  std::ofstream out(job_dir(id) / "trajectory.jsonl", std::ios::binary | std::ios::app);
  out << line.dump() << "\n";
  out.flush();
  if (!out) throw IoError("cannot append to trajectory of " + id);
}

std::vector<json> RunStore::read_trajectory(const std::string& id) const {
  std::vector<json> lines;
  std::istringstream in(read_file(job_dir(id) / "trajectory.jsonl"));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(json::parse(line));
  }
  return lines;
}

void RunStore::save_result(const std::string& id, const OptimizationResult& result) {
  std::lock_guard lock(lock_for(id));
  write_atomic(job_dir(id) / "result.json", promptforge::to_json(result).dump(2) + "\n");
}

void RunStore::remove_result(const std::string& id) {
  std::lock_guard lock(lock_for(id));
  std::error_code ec;
  fs::remove(job_dir(id) / "result.json", ec);
}

std::optional<std::string> RunStore::read_result(const std::string& id) const {
  const fs::path path = job_dir(id) / "result.json";
  if (!fs::exists(path)) return std::nullopt;
  return read_file(path);
}

void RunStore::append_log(const std::string& id, std::string_view line) {
  std::lock_guard lock(lock_for(id));
  std::ofstream out(job_dir(id) / "log.txt", std::ios::binary | std::ios::app);
  out << utc_now() << " " << line << "\n";
}

}  // namespace promptforge::service
