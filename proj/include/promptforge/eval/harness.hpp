// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promptforge/core/types.hpp"
#include "promptforge/eval/extraction.hpp"
#include "promptforge/models/client.hpp"

namespace promptforge::eval {

/// The task model's input for one example: question, then prompt, each on
/// its own line.
std::string compose_task_input(std::string_view question, std::string_view prompt);

struct ScoreOptions {
  /// Concurrent generations; records come back in dataset order regardless.
  int workers = 1;
  GenerationParams generation;
  /// Length cap of the reasoning chain in extraction_prompt mode; unset uses
  /// generation.max_new_tokens for both the chain and the answer.
  std::optional<int> chain_max_tokens;
};

struct PromptScore {
  /// Mean metric over `records`.
  double score = 0.0;
  std::vector<EvaluationRecord> records;
  std::size_t failures = 0;
};

/// Runs `prompt` over the dataset (or the examples named in `subset`, kept in
/// dataset order) and scores each extracted answer with `metric`.
///
/// A failing generation yields a record with metric 0 and the error text; a
/// RunError is raised only when every example fails. In extraction_prompt
/// mode each example costs two generations: the reasoning (up to the first
/// newline), then the continuation after reasoning + "\n" + extractor.
PromptScore score_prompt(std::string_view prompt, const TaskDataset& dataset,
                         models::GenerativeClient& client, const ExtractionSpec& extraction,
                         std::string_view metric,
                         const std::optional<std::vector<std::string>>& subset = std::nullopt,
                         const ScoreOptions& options = {});

/// min(size, |D|) example ids drawn without replacement, in dataset order.
std::vector<std::string> sample_minibatch(const TaskDataset& dataset, std::size_t size,
                                          std::uint64_t seed);

}  // namespace promptforge::eval
