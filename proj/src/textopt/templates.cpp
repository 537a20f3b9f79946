// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/textopt/templates.hpp"

#include <fstream>
#include <sstream>

#include "promptforge/core/error.hpp"

namespace promptforge::textopt {

namespace detail {
const std::map<std::string, std::string, std::less<>>& builtin_templates();
}

namespace {

bool slot_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

// Calls on_slot(name) for each {name} and on_text(chunk) for the text between.
template <typename OnText, typename OnSlot>
void scan(std::string_view text, OnText on_text, OnSlot on_slot) {
  std::size_t i = 0;
  std::size_t chunk = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      std::size_t j = i + 1;
      while (j < text.size() && slot_char(text[j])) ++j;
      if (j > i + 1 && j < text.size() && text[j] == '}') {
        on_text(text.substr(chunk, i - chunk));
        on_slot(std::string(text.substr(i + 1, j - i - 1)));
        i = j + 1;
        chunk = i;
        continue;
      }
    }
    ++i;
  }
  on_text(text.substr(chunk));
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::induce: return "induce";
    case Role::paraphrase: return "paraphrase";
    case Role::critique: return "critique";
    case Role::edit: return "edit";
    case Role::inspect_and_refine: return "inspect_and_refine";
    case Role::polish: return "polish";
    case Role::textual_gradient: return "textual_gradient";
    case Role::apply_gradient: return "apply_gradient";
  }
  return "unknown";
}

MetaPromptTemplate::MetaPromptTemplate(Method method, Role role, std::string text)
    : method_(method), role_(role), text_(std::move(text)) {
  scan(text_, [](std::string_view) {}, [this](std::string name) { slots_.insert(std::move(name)); });
}

std::string MetaPromptTemplate::render(const std::map<std::string, std::string>& values) const {
  for (const auto& [name, value] : values) {
    if (!slots_.count(name)) {
      throw ContractError("template " + file_name(method_, role_) + " has no slot {" + name + "}");
    }
  }
  std::string out;
  scan(
      text_, [&](std::string_view chunk) { out += chunk; },
      [&](const std::string& name) {
        auto it = values.find(name);
        if (it == values.end()) {
          throw ContractError("no value for slot {" + name + "} of " + file_name(method_, role_));
        }
        out += it->second;
      });
  return out;
}

std::string MetaPromptTemplate::file_name(Method method, Role role) {
  return std::string(to_string(method)) + "." + std::string(to_string(role)) + ".txt";
}

MetaPromptTemplate MetaPromptTemplate::load(Method method, Role role,
                                            const std::filesystem::path& templates_dir) {
  const std::string name = file_name(method, role);
  if (!templates_dir.empty()) {
    const auto path = templates_dir / name;
    if (std::filesystem::exists(path)) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw IoError("cannot read template " + path.string());
      std::ostringstream text;
      text << in.rdbuf();
      return MetaPromptTemplate(method, role, text.str());
    }
  }
  const auto& builtin = detail::builtin_templates();
  auto it = builtin.find(name.substr(0, name.size() - 4));
  if (it == builtin.end()) throw IoError("no built-in template " + name);
  return MetaPromptTemplate(method, role, it->second);
}

const std::vector<std::pair<Method, Role>>& template_roles() {
  static const std::vector<std::pair<Method, Role>> roles = {
      {Method::ape, Role::induce},
      {Method::ape, Role::paraphrase},
      {Method::apo, Role::critique},
      {Method::apo, Role::edit},
      {Method::pe2, Role::inspect_and_refine},
      {Method::pe2, Role::polish},
      {Method::textgrad, Role::textual_gradient},
      {Method::textgrad, Role::apply_gradient},
  };
  return roles;
}

const std::set<std::string>& required_slots(Role role) {
  static const std::map<Role, std::set<std::string>> slots = {
      {Role::induce, {"exemplars", "num_prompts"}},
      {Role::paraphrase, {"prompt"}},
      {Role::critique, {"prompt", "error_cases"}},
      {Role::edit, {"prompt", "error_cases", "critique", "num_prompts"}},
      {Role::inspect_and_refine, {"prompt", "score", "error_cases", "history", "step_size"}},
      {Role::polish, {"prompt", "score", "history", "step_size"}},
      {Role::textual_gradient, {"prompt", "error_cases"}},
      {Role::apply_gradient, {"prompt", "gradient"}},
  };
  return slots.at(role);
}

}  // namespace promptforge::textopt
