// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/service/jobs.hpp"

#include <random>

#include "promptforge/core/error.hpp"
#include "promptforge/core/json_io.hpp"
#include "promptforge/optimize.hpp"

namespace promptforge::service {

namespace {

std::string new_job_id() {
  static std::mutex m;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lock(m);
  char buf[32];
  std::snprintf(buf, sizeof buf, "job-%016llx", static_cast<unsigned long long>(gen()));
  return buf;
}

}  // namespace

JobManager::JobManager(RunStore& store, int max_concurrent_jobs) : store_(store) {
  recover();
  const int n = std::max(max_concurrent_jobs, 1);
  for (int i = 0; i < n; ++i) workers_.emplace_back([this] { worker_loop(); });
}

JobManager::~JobManager() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  work_cv_.notify_all();
  for (auto& t : workers_) t.join();
}

void JobManager::recover() {
  for (Job job : store_.list_jobs()) {
    next_sequence_ = std::max(next_sequence_, job.sequence + 1);
    if (job.state == JobState::running) {
      job.state = JobState::failed;
      job.error = "interrupted";
      job.finished_at = utc_now();
      store_.remove_result(job.id);
      store_.save_job(job);
      store_.append_log(job.id, "marked failed: interrupted by a restart");
    } else if (job.state == JobState::queued) {
      queue_.push_back(job.id);
    }
    jobs_.emplace(job.id, std::move(job));
  }
}

Job JobManager::submit(const OptimizerConfig& config, const std::string& dataset_ref,
                       std::optional<std::string> p_init) {
  validate(config);
  const TaskDataset dataset = store_.load_dataset(dataset_ref);
  Job job;
  job.id = new_job_id();
  job.config = config;
  job.dataset_ref = dataset_ref;
  job.p_init = std::move(p_init);
  job.created_at = utc_now();
  {
    std::lock_guard lock(mutex_);
    job.sequence = next_sequence_++;
    store_.create_job(job, dataset);
    jobs_.emplace(job.id, job);
    queue_.push_back(job.id);
  }
  work_cv_.notify_one();
  return job;
}

Job JobManager::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw NotFoundError("unknown job '" + id + "'");
  return it->second;
}

std::vector<Job> JobManager::list() const {
  std::lock_guard lock(mutex_);
  std::vector<Job> out;
  for (const auto& [id, job] : jobs_) out.push_back(job);
  std::sort(out.begin(), out.end(), [](const Job& a, const Job& b) { return a.sequence < b.sequence; });
  return out;
}

std::string JobManager::result(const std::string& id) const {
  const Job job = get(id);
  if (job.state != JobState::succeeded) {
    throw ConflictError(std::string(to_string(job.state)));
  }
  auto bytes = store_.read_result(id);
  if (!bytes) throw IoError("result.json missing for succeeded job " + id);
  return *bytes;
}

Job JobManager::cancel(const std::string& id) {
  std::unique_lock lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw NotFoundError("unknown job '" + id + "'");
  Job& job = it->second;
  if (is_terminal(job.state)) throw ConflictError(std::string(to_string(job.state)));
  job.cancel_requested = true;
  if (job.state == JobState::queued) {
    queue_.erase(std::remove(queue_.begin(), queue_.end(), id), queue_.end());
    job.state = JobState::cancelled;
    job.finished_at = utc_now();
  }
  store_.save_job(job);
  const Job snapshot = job;
  lock.unlock();
  store_.append_log(id, snapshot.state == JobState::cancelled ? "cancelled before start" : "cancel requested");
  idle_cv_.notify_all();
  return snapshot;
}

void JobManager::wait_idle() {
  std::unique_lock lock(mutex_);
  idle_cv_.wait(lock, [&] { return queue_.empty() && active_ == 0; });
}

void JobManager::update(const std::string& id, const std::function<void(Job&)>& change) {
  std::lock_guard lock(mutex_);
  Job& job = jobs_.at(id);
  change(job);
  store_.save_job(job);
}

void JobManager::worker_loop() {
  while (true) {
    std::string id;
    {
      std::unique_lock lock(mutex_);
      work_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
      ++active_;
      // Claimed under the lock so a concurrent cancel sees either queued or running.
      Job& job = jobs_.at(id);
      job.state = JobState::running;
      job.started_at = utc_now();
      store_.save_job(job);
    }
    run(id);
    {
      std::lock_guard lock(mutex_);
      --active_;
    }
    idle_cv_.notify_all();
  }
}

void JobManager::run(const std::string& id) {
  const Job job = get(id);
  store_.append_log(id, "started " + std::string(to_string(job.config.method)));

  RunHooks hooks;
  hooks.on_round = [&](const RoundReport& r) {
    store_.append_trajectory(id, trajectory_line(r.round, r.best_score, r.best_prompt));
    update(id, [&](Job& j) {
      j.progress.rounds_completed = r.round;
      j.progress.best_score = r.best_score;
    });
  };
  hooks.stop_requested = [&] {
    std::lock_guard lock(mutex_);
    return stopping_ || jobs_.at(id).cancel_requested;
  };
  hooks.log = [&](std::string_view line) { store_.append_log(id, line); };

  JobState final_state = JobState::failed;
  std::optional<std::string> error;
  try {
    const TaskDataset dataset = store_.job_dataset(id);
    const OptimizationResult result = promptforge::optimize(job.config, dataset, job.p_init, hooks);
    store_.save_result(id, result);
    final_state = JobState::succeeded;
  } catch (const CancelledError&) {
    std::lock_guard lock(mutex_);
    if (jobs_.at(id).cancel_requested) {
      final_state = JobState::cancelled;
    } else {
      error = "interrupted by shutdown";
    }
  } catch (const std::exception& e) {
    error = e.what();
  }
  update(id, [&](Job& j) {
    j.state = final_state;
    j.error = error;
    j.finished_at = utc_now();
  });
  store_.append_log(id, std::string("finished: ") + std::string(to_string(final_state)) +
                            (error ? " (" + *error + ")" : ""));
}

}  // namespace promptforge::service
