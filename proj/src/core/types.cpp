// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "promptforge/core/error.hpp"
#include "promptforge/core/registry.hpp"
#include "promptforge/eval/extraction.hpp"

namespace promptforge {

std::string trim(std::string_view s) {
  constexpr std::string_view ws = " \t\n\r\f\v";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return std::string(s.substr(first, last - first + 1));
}

TaskDataset::TaskDataset(std::string name, std::vector<TaskExample> examples)
    : name_(std::move(name)), examples_(std::move(examples)) {
  if (examples_.empty()) throw ValidationError("", "dataset contains no examples");
  std::set<std::string, std::less<>> seen;
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const auto& ex = examples_[i];
    const std::string where = "example " + std::to_string(i);
    if (trim(ex.question).empty()) throw ValidationError(where + ": question", "must not be blank");
    if (trim(ex.answer).empty()) throw ValidationError(where + ": answer", "must not be blank");
    if (!seen.insert(ex.id).second) {
      throw ValidationError(where + ": id", "duplicate id '" + ex.id + "'");
    }
  }
}

const TaskExample* TaskDataset::find(std::string_view id) const {
  auto it = std::find_if(examples_.begin(), examples_.end(),
                         [&](const TaskExample& e) { return e.id == id; });
  return it == examples_.end() ? nullptr : &*it;
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::ape: return "ape";
    case Method::apo: return "apo";
    case Method::pe2: return "pe2";
    case Method::textgrad: return "textgrad";
    case Method::greater: return "greater";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (to_string(m) == name) return m;
  }
  throw ValidationError("method", "unknown method '" + std::string(name) +
                                      "' (expected ape, apo, pe2, textgrad or greater)");
}

std::string_view to_string(ExtractionMode m) {
  switch (m) {
    case ExtractionMode::extraction_prompt: return "extraction_prompt";
    case ExtractionMode::regex: return "regex";
    case ExtractionMode::last_number: return "last_number";
  }
  return "unknown";
}

ExtractionMode parse_extraction_mode(std::string_view name) {
  for (auto m : {ExtractionMode::extraction_prompt, ExtractionMode::regex,
                 ExtractionMode::last_number}) {
    if (to_string(m) == name) return m;
  }
  throw ValidationError("extraction.mode", "unknown extraction mode '" + std::string(name) + "'");
}

void check_invariants(const PromptCandidate& c) {
  if (c.score && !(*c.score >= 0.0 && *c.score <= 1.0)) {
    throw ContractError("candidate " + c.id + " score outside [0,1]");
  }
  if (c.provenance.round < 0) throw ContractError("candidate " + c.id + " has negative round");
  if (c.provenance.round == 0 && c.provenance.parent) {
    throw ContractError("round-0 candidate " + c.id + " must not have a parent");
  }
}

OptimizerConfig default_config(Method m) {
  OptimizerConfig c;
  c.method = m;
  if (m == Method::greater) {
    c.rounds = 10;
    c.task_model.kind = ModelKind::local;
  }
  return c;
}

namespace {

void require_positive(int value, const char* field) {
  if (value < 1) throw ValidationError(field, "must be >= 1 (got " + std::to_string(value) + ")");
}

void validate_model(const ModelRef& m, const std::string& field) {
  if (trim(m.identifier).empty()) {
    throw ValidationError(field + ".identifier", "must not be empty");
  }
  if (m.generation.temperature < 0.0 || !std::isfinite(m.generation.temperature)) {
    throw ValidationError(field + ".generation.temperature", "must be a finite value >= 0");
  }
  if (m.generation.max_new_tokens < 0) {
    throw ValidationError(field + ".generation.max_new_tokens", "must be >= 0");
  }
}

}  // namespace

void validate(const OptimizerConfig& c) {
  validate_model(c.task_model, "task_model");
  if (c.method == Method::greater) {
    if (c.task_model.kind != ModelKind::local) {
      throw ValidationError("task_model.kind",
                            "method greater requires a local task model (got api)");
    }
  } else {
    if (!c.optim_model) {
      throw ValidationError("optim_model",
                            "method " + std::string(to_string(c.method)) + " requires an optimizer model");
    }
  }
  if (c.optim_model) validate_model(*c.optim_model, "optim_model");

  require_positive(c.rounds, "rounds");
  require_positive(c.pool_size, "pool_size");
  if (c.minibatch_size) require_positive(*c.minibatch_size, "minibatch_size");
  require_positive(c.beam_width, "beam_width");
  require_positive(c.candidates_per_round, "candidates_per_round");
  require_positive(c.top_k_tokens, "top_k_tokens");
  require_positive(c.positions_per_round, "positions_per_round");
  require_positive(c.eval_workers, "eval_workers");
  require_positive(c.step_size, "step_size");
  if (c.exemplars < 0) throw ValidationError("exemplars", "must be >= 0");
  if (c.max_chain_tokens < 0) throw ValidationError("max_chain_tokens", "must be >= 0");

  if (c.extraction) eval::ExtractionSpec::from_choice(*c.extraction);
  if (!MetricRegistry::global().contains(c.metric)) {
    throw ValidationError("metric", "unknown metric '" + c.metric + "'");
  }
  if (c.method == Method::greater) {
    if (!LossRegistry::global().contains(c.loss)) {
      throw ValidationError("loss", "unknown loss '" + c.loss + "'");
    }
    if (trim(c.extraction_prompt).empty()) {
      throw ValidationError("extraction_prompt", "method greater requires an extraction prompt");
    }
  }
}

std::size_t effective_minibatch(const OptimizerConfig& c, std::size_t dataset_size) {
  const std::size_t requested =
      c.minibatch_size ? static_cast<std::size_t>(*c.minibatch_size) : std::size_t{16};
  return std::min(requested, dataset_size);
}

bool ranks_before(const CandidateRank& a, const CandidateRank& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  if (a.round != b.round) return a.round < b.round;
  return a.index < b.index;
}

void check_invariants(const OptimizationResult& r) {
  for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
    if (r.trajectory[i].score < r.trajectory[i - 1].score) {
      throw ContractError("trajectory decreases at round " + std::to_string(r.trajectory[i].round));
    }
  }
  double best_in_pools = -1.0;
  for (const auto& pool : r.pools) {
    for (const auto& c : pool.candidates) {
      check_invariants(c);
      if (c.score) best_in_pools = std::max(best_in_pools, *c.score);
    }
  }
  if (!r.best.score || *r.best.score != best_in_pools) {
    throw ContractError("best score is not the maximum pool score");
  }
}

}  // namespace promptforge
