// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "promptforge/core/types.hpp"

namespace promptforge::textopt {

/// What a meta-prompt asks of the optimizer model. `polish` is the
/// inspect-and-refine variant used when there are no error cases.
enum class Role {
  induce,
  paraphrase,
  critique,
  edit,
  inspect_and_refine,
  polish,
  textual_gradient,
  apply_gradient,
};

std::string_view to_string(Role role);

/// A meta-prompt with `{slot}` placeholders. Slot names are lowercase
/// identifiers; braces around anything else are literal text.
class MetaPromptTemplate {
 public:
  MetaPromptTemplate(Method method, Role role, std::string text);

  Method method() const noexcept { return method_; }
  Role role() const noexcept { return role_; }
  const std::string& text() const noexcept { return text_; }
  const std::set<std::string>& slots() const noexcept { return slots_; }

  /// Substitutes every slot. Throws ContractError when a slot has no value or
  /// a value names a slot the template does not have.
  std::string render(const std::map<std::string, std::string>& values) const;

  /// File name under a templates directory: "<method>.<role>.txt".
  static std::string file_name(Method method, Role role);

  /// The built-in template, or `<templates_dir>/<method>.<role>.txt` when
  /// that file exists. Throws IoError if an existing override is unreadable.
  static MetaPromptTemplate load(Method method, Role role, const std::filesystem::path& templates_dir = {});

 private:
  Method method_;
  Role role_;
  std::string text_;
  std::set<std::string> slots_;
};

/// Every (method, role) pair the optimizers render.
const std::vector<std::pair<Method, Role>>& template_roles();

/// Slots each role's template must define.
const std::set<std::string>& required_slots(Role role);

}  // namespace promptforge::textopt
