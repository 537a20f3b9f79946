// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "promptforge/core/types.hpp"

namespace promptforge::service {

enum class JobState { queued, running, succeeded, failed, cancelled };

std::string_view to_string(JobState s);
JobState parse_job_state(std::string_view s);
bool is_terminal(JobState s) noexcept;

struct JobProgress {
  int rounds_completed = 0;
  std::optional<double> best_score;
};

struct Job {
  std::string id;
  /// Submission order; queued jobs restart in this order after a reboot.
  std::uint64_t sequence = 0;
  JobState state = JobState::queued;
  OptimizerConfig config;
  std::string dataset_ref;
  std::optional<std::string> p_init;
  std::string created_at;
  std::optional<std::string> started_at;
  std::optional<std::string> finished_at;
  JobProgress progress;
  std::optional<std::string> error;
  bool cancel_requested = false;
};

nlohmann::json to_json(const Job& job);
Job job_from_json(const nlohmann::json& j);

/// UTC with milliseconds, "2026-10-14T08:53:00.123Z".
std::string utc_now();

/// File-backed persistence for datasets and jobs:
///
///   <root>/datasets/<ref>.jsonl
///   <root>/jobs/<id>/job.json          state, progress, timestamps
///   <root>/jobs/<id>/config.json
///   <root>/jobs/<id>/dataset.jsonl     copy taken at submission
///   <root>/jobs/<id>/trajectory.jsonl  one line per committed round
///   <root>/jobs/<id>/result.json       only once the job succeeded
///   <root>/jobs/<id>/log.txt
///
/// Whole-file writes go through a temporary file and a rename, so readers
/// never observe a partial job.json or result.json.
class RunStore {
 public:
  /// Creates the layout; throws IoError when the root is not writable.
  explicit RunStore(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Validates the jsonl and stores it by content hash; returns the ref.
  std::string put_dataset(std::string_view jsonl);
  bool has_dataset(const std::string& ref) const;
  /// Throws NotFoundError for an unknown ref.
  TaskDataset load_dataset(const std::string& ref) const;

  void create_job(const Job& job, const TaskDataset& dataset);
  void save_job(const Job& job);
  Job load_job(const std::string& id) const;
  std::vector<Job> list_jobs() const;
  TaskDataset job_dataset(const std::string& id) const;

  void append_trajectory(const std::string& id, const nlohmann::json& line);
  std::vector<nlohmann::json> read_trajectory(const std::string& id) const;
  void save_result(const std::string& id, const OptimizationResult& result);
  void remove_result(const std::string& id);
  /// The stored bytes of result.json, or nullopt.
  std::optional<std::string> read_result(const std::string& id) const;
  void append_log(const std::string& id, std::string_view line);

  std::filesystem::path job_dir(const std::string& id) const;

 private:
  std::mutex& lock_for(const std::string& id);

  std::filesystem::path root_;
  std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

/// Writes `content` to `path` via a sibling temporary file and rename.
void write_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace promptforge::service
