// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/eval/metrics.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "promptforge/core/types.hpp"

namespace promptforge::eval {

namespace {

std::string fold(std::string_view s) {
  std::string out = trim(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

double exact_match(std::string_view predicted, std::string_view gold) {
  return fold(predicted) == fold(gold) ? 1.0 : 0.0;
}

std::optional<double> parse_number(std::string_view text) {
  std::string s = trim(text);
  std::string digits;
  for (char c : s) {
    if (c != ',') digits.push_back(c);
  }
  if (!digits.empty() && digits.front() == '+') digits.erase(0, 1);
  if (digits.empty()) return std::nullopt;
  for (char c : digits) {
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-')) {
      return std::nullopt;
    }
  }
  double value = 0.0;
  const char* first = digits.data();
  const char* last = digits.data() + digits.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return value;
}

double numeric_match(std::string_view predicted, std::string_view gold, double tolerance) {
  const auto p = parse_number(predicted);
  const auto g = parse_number(gold);
  if (!p || !g) return 0.0;
  return std::abs(*p - *g) <= tolerance ? 1.0 : 0.0;
}

}  // namespace promptforge::eval
