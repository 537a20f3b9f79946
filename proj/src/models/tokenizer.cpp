// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/models/tokenizer.hpp"

#include <cstdio>

#include "promptforge/core/error.hpp"

namespace promptforge::models {

CharTokenizer::CharTokenizer(std::string alphabet) : alphabet_(std::move(alphabet)) {
  lookup_.fill(-1);
  for (std::size_t i = 0; i < alphabet_.size(); ++i) {
    auto& slot = lookup_[static_cast<unsigned char>(alphabet_[i])];
    if (slot != -1) throw ValidationError("alphabet", "duplicate symbol in tokenizer alphabet");
    slot = static_cast<int>(i);
  }
  if (alphabet_.empty()) throw ValidationError("alphabet", "tokenizer alphabet is empty");
}

const std::string& CharTokenizer::default_alphabet() {
  static const std::string alphabet =
      "\n abcdefghijklmnopqrstuvwxyz0123456789.,!?'\"()[]+-*/=:;<>_%&#$@~";
  return alphabet;
}

std::optional<std::size_t> CharTokenizer::first_unrepresentable(std::string_view text) const noexcept {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (lookup_[static_cast<unsigned char>(text[i])] < 0) return i;
  }
  return std::nullopt;
}

bool CharTokenizer::can_represent(std::string_view text) const noexcept {
  return !first_unrepresentable(text).has_value();
}

std::vector<int> CharTokenizer::tokenize(std::string_view text) const {
  std::vector<int> ids;
  ids.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const int id = lookup_[static_cast<unsigned char>(text[i])];
    if (id < 0) {
      char code[8];
      std::snprintf(code, sizeof code, "0x%02x", static_cast<unsigned char>(text[i]));
      throw ValidationError("text", "character " + std::string(code) + " at offset " +
                                        std::to_string(i) + " is outside the tokenizer alphabet");
    }
    ids.push_back(id);
  }
  return ids;
}

std::string CharTokenizer::detokenize(std::span<const int> ids) const {
  std::string out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || id >= vocab_size()) throw IndexError("token id " + std::to_string(id) + " out of range");
    out.push_back(alphabet_[static_cast<std::size_t>(id)]);
  }
  return out;
}

}  // namespace promptforge::models
