// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include "promptforge/core/types.hpp"

namespace promptforge {

// JSON forms of the domain types. These are the on-disk formats of the run
// store (config.json, result.json, trajectory.jsonl) and the service bodies.

nlohmann::json to_json(const ModelRef& m);
/// Accepts either a full object or a bare identifier string (api model).
ModelRef model_ref_from_json(const nlohmann::json& j, const std::string& field);

nlohmann::json to_json(const OptimizerConfig& c);
/// Starts from default_config(method) and overrides every key present. Unknown
/// keys and mistyped values raise ValidationError naming the key.
OptimizerConfig config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PromptCandidate& c);
PromptCandidate candidate_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EvaluationRecord& r);
EvaluationRecord record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const OptimizationResult& r);
OptimizationResult result_from_json(const nlohmann::json& j);

/// One trajectory.jsonl line.
nlohmann::json trajectory_line(int round, double best_score, const std::string& best_prompt);

}  // namespace promptforge
