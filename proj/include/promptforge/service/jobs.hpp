// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "promptforge/service/run_store.hpp"

namespace promptforge::service {

/// Runs submitted jobs on a fixed set of worker threads, first come first
/// served, at most `max_concurrent_jobs` at a time.
class JobManager {
 public:
  /// Scans the store first: jobs left running are marked failed
  /// ("interrupted") and queued ones are queued again in submission order.
  JobManager(RunStore& store, int max_concurrent_jobs = 1);
  /// Stops the workers. Running jobs are interrupted at their next round
  /// boundary and recorded as failed; queued jobs stay queued on disk.
  ~JobManager();

  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  /// Throws ValidationError for a bad config and NotFoundError for an
  /// unknown dataset.
  Job submit(const OptimizerConfig& config, const std::string& dataset_ref, std::optional<std::string> p_init);

  /// Throws NotFoundError.
  Job get(const std::string& id) const;
  std::vector<Job> list() const;
  /// The persisted result.json bytes. Throws ConflictError unless succeeded.
  std::string result(const std::string& id) const;
  /// Queued jobs are cancelled at once, running ones at their next round
  /// boundary. Throws ConflictError for finished jobs.
  Job cancel(const std::string& id);

  /// Blocks until no job is queued or running.
  void wait_idle();

  RunStore& store() noexcept { return store_; }

 private:
  void recover();
  void worker_loop();
  void run(const std::string& id);
  void update(const std::string& id, const std::function<void(Job&)>& change);

  RunStore& store_;
  mutable std::mutex mutex_;
  std::condition_variable work_cv_;
  std::condition_variable idle_cv_;
  std::map<std::string, Job> jobs_;
  std::deque<std::string> queue_;
  int active_ = 0;
  std::uint64_t next_sequence_ = 1;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace promptforge::service
