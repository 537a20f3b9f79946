// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "promptforge/core/types.hpp"

namespace promptforge {

struct RoundReport {
  int round = 0;
  double best_score = 0.0;
  std::string best_prompt;
};

/// Observers of a running optimization. All are optional.
struct RunHooks {
  /// Fired once per committed round from round 1 on.
  std::function<void(const RoundReport&)> on_round;
  /// Polled at round boundaries; returning true aborts with CancelledError.
  std::function<bool()> stop_requested;
  std::function<void(std::string_view)> log;
};

/// Bookkeeping shared by every optimizer: candidate pools, best-so-far,
/// trajectory and cooperative cancellation.
///
/// Candidates are ranked by score, then by lower loss when both carry one,
/// then by earlier round, then by earlier index within the round.
class RunTracker {
 public:
  RunTracker(OptimizerConfig config, const RunHooks& hooks);

  /// Throws CancelledError when a stop was requested.
  void begin_round(int round);

  /// Adds an evaluated candidate to `round`'s pool and returns its index.
  std::size_t add(int round, std::string text, double score,
                  std::optional<std::string> parent = std::nullopt);
  PromptCandidate& candidate(int round, std::size_t index);
  const std::vector<PromptCandidate>& pool(int round) const;

  /// Folds the round into best-so-far, appends a trajectory point and fires
  /// on_round (both skipped for round 0, which only holds the seed prompt).
  /// Throws CancelledError first if a stop was requested, so an interrupted
  /// round leaves no trace in the trajectory.
  void commit_round(int round);

  bool ranks_before(const PromptCandidate& a, const PromptCandidate& b) const;

  const PromptCandidate& best() const;
  int committed_rounds() const noexcept { return static_cast<int>(result_.trajectory.size()); }
  void log(std::string_view message) const;
  bool stop_requested() const;

  OptimizationResult& result() noexcept { return result_; }

 private:
  RoundPool& pool_for(int round);

  OptimizationResult result_;
  const RunHooks& hooks_;
  std::optional<std::pair<int, std::size_t>> best_;
};

/// Prompt used when the caller passes none: the first example's own prompt.
std::string resolve_p_init(const TaskDataset& dataset, const std::optional<std::string>& p_init);

}  // namespace promptforge
