// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string_view>

namespace promptforge::eval {

/// 1.0 iff the trimmed, case-folded strings are equal.
double exact_match(std::string_view predicted, std::string_view gold);

/// 1.0 iff both sides parse as numbers within `tolerance` of each other.
double numeric_match(std::string_view predicted, std::string_view gold, double tolerance);

/// Parses a plain decimal literal (optional sign, digits, optional fraction,
/// ',' thousands separators); nullopt for anything else.
std::optional<double> parse_number(std::string_view text);

}  // namespace promptforge::eval
