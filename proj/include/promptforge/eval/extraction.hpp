// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <regex>
#include <string>
#include <string_view>

#include "promptforge/core/types.hpp"

namespace promptforge::eval {

/// Validated answer-extraction rule.
///
/// extraction_prompt: the payload is appended after the reasoning and the
///   model's continuation is read; the answer is its first line, trimmed.
/// regex: the first capture group of the first match in the raw output.
/// last_number: the final numeric literal (digit runs joined by single '.'
///   or ',' separators, optional leading '-'); commas are dropped.
class ExtractionSpec {
 public:
  static ExtractionSpec extraction_prompt(std::string prompt);
  /// Throws ValidationError unless the pattern compiles and has exactly one
  /// capture group.
  static ExtractionSpec regex(std::string pattern);
  static ExtractionSpec last_number();
  static ExtractionSpec from_choice(const ExtractionChoice& choice);

  /// The whole trimmed output.
  static ExtractionSpec whole_output();

  ExtractionMode mode() const noexcept { return mode_; }
  const std::string& payload() const noexcept { return payload_; }

 private:
  ExtractionSpec(ExtractionMode mode, std::string payload);

  ExtractionMode mode_;
  std::string payload_;
  std::shared_ptr<const std::regex> pattern_;
  bool whole_output_ = false;  // evaluated without the regex engine

  friend std::string extract_answer(std::string_view raw_output, const ExtractionSpec& spec);
};

/// Pure; returns "" when nothing matches.
std::string extract_answer(std::string_view raw_output, const ExtractionSpec& spec);

/// The extraction a config asks for: its explicit `extraction`, else the
/// extraction prompt for the gradient method and the whole output otherwise.
ExtractionSpec resolve_extraction(const OptimizerConfig& config);

}  // namespace promptforge::eval
