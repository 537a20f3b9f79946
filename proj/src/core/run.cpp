// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/core/run.hpp"

#include <algorithm>

#include "promptforge/core/error.hpp"

namespace promptforge {

RunTracker::RunTracker(OptimizerConfig config, const RunHooks& hooks) : hooks_(hooks) {
  result_.config = std::move(config);
}

bool RunTracker::stop_requested() const { return hooks_.stop_requested && hooks_.stop_requested(); }

void RunTracker::log(std::string_view message) const {
  if (hooks_.log) hooks_.log(message);
}

void RunTracker::begin_round(int round) {
  if (stop_requested()) throw CancelledError();
  pool_for(round);
}

RoundPool& RunTracker::pool_for(int round) {
  auto it = std::find_if(result_.pools.begin(), result_.pools.end(),
                         [&](const RoundPool& p) { return p.round == round; });
  if (it != result_.pools.end()) return *it;
  result_.pools.push_back({round, {}});
  return result_.pools.back();
}

std::size_t RunTracker::add(int round, std::string text, double score,
                            std::optional<std::string> parent) {
  RoundPool& pool = pool_for(round);
  PromptCandidate c;
  c.id = "r" + std::to_string(round) + "c" + std::to_string(pool.candidates.size());
  c.text = std::move(text);
  c.score = score;
  c.provenance = {std::string(to_string(result_.config.method)), round,
                  round == 0 ? std::nullopt : std::move(parent)};
  check_invariants(c);
  pool.candidates.push_back(std::move(c));
  return pool.candidates.size() - 1;
}

PromptCandidate& RunTracker::candidate(int round, std::size_t index) {
  return pool_for(round).candidates.at(index);
}

const std::vector<PromptCandidate>& RunTracker::pool(int round) const {
  for (const auto& p : result_.pools) {
    if (p.round == round) return p.candidates;
  }
  throw IndexError("no pool for round " + std::to_string(round));
}

bool RunTracker::ranks_before(const PromptCandidate& a, const PromptCandidate& b) const {
  const double sa = a.score.value_or(-1.0);
  const double sb = b.score.value_or(-1.0);
  if (sa != sb) return sa > sb;
  if (a.loss && b.loss && *a.loss != *b.loss) return *a.loss < *b.loss;
  if (a.provenance.round != b.provenance.round) return a.provenance.round < b.provenance.round;
  // ids are r<round>c<index>; index order within a round is insertion order
  const auto index = [](const PromptCandidate& c) { return std::stoul(c.id.substr(c.id.find('c') + 1)); };
  return index(a) < index(b);
}

void RunTracker::commit_round(int round) {
  if (stop_requested()) throw CancelledError();
  const RoundPool& pool = pool_for(round);
  for (std::size_t i = 0; i < pool.candidates.size(); ++i) {
    if (!best_ || ranks_before(pool.candidates[i], best())) best_ = std::make_pair(round, i);
  }
  if (!best_) throw RunError("round " + std::to_string(round) + " produced no candidates");
  const PromptCandidate& b = best();
  result_.best = b;
  // Round 0 only seeds best-so-far; the trajectory starts with round 1.
  if (round == 0) return;
  result_.trajectory.push_back({round, *b.score});
  if (hooks_.on_round) hooks_.on_round({round, *b.score, b.text});
}

const PromptCandidate& RunTracker::best() const {
  if (!best_) throw RunError("no committed candidates yet");
  for (const auto& p : result_.pools) {
    if (p.round == best_->first) return p.candidates.at(best_->second);
  }
  throw RunError("best candidate's pool is missing");
}

std::string resolve_p_init(const TaskDataset& dataset, const std::optional<std::string>& p_init) {
  return p_init ? *p_init : dataset[0].prompt;
}

}  // namespace promptforge
