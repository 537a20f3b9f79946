// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/eval/extraction.hpp"

#include <algorithm>

#include "promptforge/core/error.hpp"

namespace promptforge::eval {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Left-to-right maximal munch of -?\d+([.,]\d+)*, keeping the last literal.
std::string last_numeric_literal(std::string_view s) {
  std::string last;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i])) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    if (begin > 0 && s[begin - 1] == '-') --begin;
    while (i < s.size() && is_digit(s[i])) ++i;
    while (i + 1 < s.size() && (s[i] == '.' || s[i] == ',') && is_digit(s[i + 1])) {
      ++i;
      while (i < s.size() && is_digit(s[i])) ++i;
    }
    last.assign(s.substr(begin, i - begin));
  }
  last.erase(std::remove(last.begin(), last.end(), ','), last.end());
  return last;
}

}  // namespace

ExtractionSpec::ExtractionSpec(ExtractionMode mode, std::string payload)
    : mode_(mode), payload_(std::move(payload)) {}

ExtractionSpec ExtractionSpec::extraction_prompt(std::string prompt) {
  if (trim(prompt).empty()) {
    throw ValidationError("extraction.payload", "extraction prompt must not be empty");
  }
  return ExtractionSpec(ExtractionMode::extraction_prompt, std::move(prompt));
}

ExtractionSpec ExtractionSpec::regex(std::string pattern) {
  ExtractionSpec spec(ExtractionMode::regex, pattern);
  try {
    spec.pattern_ = std::make_shared<const std::regex>(pattern, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw ValidationError("extraction.payload", "invalid regex '" + pattern + "': " + e.what());
  }
  if (spec.pattern_->mark_count() != 1) {
    throw ValidationError("extraction.payload",
                          "regex must have exactly one capture group (found " +
                              std::to_string(spec.pattern_->mark_count()) + ")");
  }
  return spec;
}

ExtractionSpec ExtractionSpec::last_number() { return ExtractionSpec(ExtractionMode::last_number, ""); }

// libstdc++'s backtracking matcher recurses per character, so long outputs
// under this pattern would exhaust the stack; the trim below is equivalent.
ExtractionSpec ExtractionSpec::whole_output() {
  ExtractionSpec spec = regex(R"(^\s*([\s\S]*?)\s*$)");
  spec.whole_output_ = true;
  return spec;
}

ExtractionSpec ExtractionSpec::from_choice(const ExtractionChoice& choice) {
  switch (choice.mode) {
    case ExtractionMode::extraction_prompt: return extraction_prompt(choice.payload);
    case ExtractionMode::regex: return regex(choice.payload);
    case ExtractionMode::last_number: return last_number();
  }
  throw ValidationError("extraction.mode", "unknown extraction mode");
}

std::string extract_answer(std::string_view raw_output, const ExtractionSpec& spec) {
  switch (spec.mode_) {
    case ExtractionMode::extraction_prompt: {
      const auto nl = raw_output.find('\n');
      return trim(raw_output.substr(0, nl));
    }
    case ExtractionMode::regex: {
      if (spec.whole_output_) return trim(raw_output);
      std::match_results<std::string_view::const_iterator> m;
      if (!std::regex_search(raw_output.begin(), raw_output.end(), m, *spec.pattern_)) return {};
      return m[1].matched ? m[1].str() : std::string();
    }
    case ExtractionMode::last_number:
      return last_numeric_literal(raw_output);
  }
  return {};
}

ExtractionSpec resolve_extraction(const OptimizerConfig& config) {
  if (config.extraction) return ExtractionSpec::from_choice(*config.extraction);
  if (config.method == Method::greater) return ExtractionSpec::extraction_prompt(config.extraction_prompt);
  return ExtractionSpec::whole_output();
}

}  // namespace promptforge::eval
