// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "promptforge/core/types.hpp"

namespace promptforge::dataio {

// On-disk contract: UTF-8, one JSON object per line, string fields
// "question", "prompt", "answer" and an optional "id". Blank lines are
// skipped; any other keys ride along in TaskExample::extras.

/// Loads a jsonl dataset. Errors name the 1-based line (and key) at fault.
TaskDataset load_jsonl(const std::filesystem::path& path);

/// Same as load_jsonl over in-memory text (service uploads).
TaskDataset parse_jsonl(std::string_view content, std::string name = "dataset");

/// Builds a dataset from manual records; errors name the record index.
TaskDataset from_records(const std::vector<nlohmann::json>& records, std::string name = "inline");

std::string to_jsonl(const TaskDataset& dataset);
void save_jsonl(const TaskDataset& dataset, const std::filesystem::path& path);

}  // namespace promptforge::dataio
