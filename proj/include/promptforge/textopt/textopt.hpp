// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promptforge/core/run.hpp"
#include "promptforge/core/types.hpp"
#include "promptforge/eval/harness.hpp"
#include "promptforge/models/client.hpp"
#include "promptforge/textopt/templates.hpp"

namespace promptforge::textopt {

struct ErrorCase {
  std::string question;
  std::string raw_output;
  std::string extracted;
  std::string gold;
};

struct HistoryEntry {
  std::string prompt;
  double score = 0.0;
};

/// What the optimizer model sees about one prompt's performance.
/// error_cases holds only examples whose metric value is below 1.
struct FeedbackBundle {
  std::string prompt_under_review;
  std::vector<ErrorCase> error_cases;
  double score = 0.0;
  std::vector<HistoryEntry> history;
};

FeedbackBundle make_bundle(std::string prompt, const eval::PromptScore& evaluation,
                           const TaskDataset& dataset, std::vector<HistoryEntry> history = {});

std::string format_error_cases(const std::vector<ErrorCase>& cases);
/// One "<score> | <prompt>" line per entry, in order.
std::string format_history(const std::vector<HistoryEntry>& history);
std::string format_score(double score);

/// Bodies of every <PROMPT>...</PROMPT> block, trimmed, empty ones skipped.
/// Without any block the trimmed message itself is returned unless `strict`.
std::vector<std::string> parse_prompts(std::string_view output, bool strict = false);

inline constexpr std::string_view kOpenTag = "<PROMPT>";
inline constexpr std::string_view kCloseTag = "</PROMPT>";

/// Upper bound on optimizer-model calls in one round:
///   ape 1 + pool_size, apo 2 * beam_width, pe2 1, textgrad 2.
int optimizer_call_bound(const OptimizerConfig& config);

/// Seeded minibatch evaluation plus bookkeeping shared by the four loops.
class Session {
 public:
  /// Validates everything and builds both clients; makes no model call.
  Session(const OptimizerConfig& config, const TaskDataset& dataset, const RunHooks& hooks);

  const OptimizerConfig& config() const noexcept { return config_; }
  const TaskDataset& dataset() const noexcept { return dataset_; }
  RunTracker& tracker() noexcept { return tracker_; }

  /// Minibatch evaluation; identical texts are evaluated once per run.
  const eval::PromptScore& evaluate(const std::string& prompt);

  /// Adds an evaluated candidate to `round` and returns its pool index.
  std::size_t propose(int round, const std::string& text, const std::string& parent);

  /// Sends a rendered meta-prompt. Transport failures are recorded and yield
  /// nullopt; they still count against the budget.
  std::optional<std::string> ask(Role role, const std::map<std::string, std::string>& slots);

  FeedbackBundle bundle_for(const PromptCandidate& candidate, std::vector<HistoryEntry> history = {});
  std::string exemplars(int round);

  std::uint64_t optimizer_calls() const noexcept { return optimizer_->calls(); }
  std::uint64_t successful_calls() const noexcept { return successes_; }
  const std::vector<std::string>& call_failures() const noexcept { return failures_; }

  /// Full-dataset re-score of the best candidate and call counts.
  OptimizationResult finish();

 private:
  OptimizerConfig config_;
  const TaskDataset& dataset_;
  RunTracker tracker_;
  std::unique_ptr<models::GenerativeClient> task_;
  std::unique_ptr<models::GenerativeClient> optimizer_;
  eval::ExtractionSpec extraction_;
  std::vector<std::string> minibatch_;
  std::map<Role, MetaPromptTemplate> templates_;
  std::map<std::string, eval::PromptScore> cache_;
  std::uint64_t successes_ = 0;
  std::vector<std::string> failures_;
};

/// Reference to a candidate held by the session's tracker.
struct Member {
  int round = 0;
  std::size_t index = 0;
};

/// induce -> evaluate -> keep top pool_size -> paraphrase survivors -> keep
/// top pool_size. Returns the new pool, best first.
std::vector<Member> ape_round(Session& session, int round, const std::vector<Member>& pool);

/// critique + edit per beam member with error cases; returns the next beam.
/// An unchanged beam is returned when no member has error cases.
std::vector<Member> apo_round(Session& session, int round, const std::vector<Member>& beam);

/// One inspect-and-refine (or polish) call; returns the round's proposals.
std::vector<Member> pe2_round(Session& session, int round, const Member& current,
                              const std::vector<HistoryEntry>& history);

/// Critique then rewrite; returns the single successor when one was parsed.
std::optional<Member> textgrad_round(Session& session, int round, const Member& current);

/// Runs the configured textual method from `p_init`.
OptimizationResult optimize(const OptimizerConfig& config, const TaskDataset& dataset,
                            const std::string& p_init, const RunHooks& hooks = {});

}  // namespace promptforge::textopt
