// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace promptforge::models {

/// One token per byte of a fixed alphabet. Anything outside the alphabet
/// (uppercase, non-ASCII) is unrepresentable rather than mapped to <unk>, so
/// detokenize(tokenize(s)) == s holds for every accepted string.
class CharTokenizer {
 public:
  explicit CharTokenizer(std::string alphabet);

  /// 64 symbols: newline, space, a-z, 0-9 and 26 punctuation marks.
  static const std::string& default_alphabet();

  int vocab_size() const noexcept { return static_cast<int>(alphabet_.size()); }
  const std::string& alphabet() const noexcept { return alphabet_; }

  bool can_represent(std::string_view text) const noexcept;
  /// Index of the first unrepresentable byte, if any.
  std::optional<std::size_t> first_unrepresentable(std::string_view text) const noexcept;

  /// Throws ValidationError naming the first unrepresentable character.
  std::vector<int> tokenize(std::string_view text) const;
  /// Throws IndexError on ids outside the vocabulary.
  std::string detokenize(std::span<const int> ids) const;

 private:
  std::string alphabet_;
  std::array<int, 256> lookup_{};
};

}  // namespace promptforge::models
