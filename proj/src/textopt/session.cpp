// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>

#include "promptforge/core/error.hpp"
#include "promptforge/core/random.hpp"
#include "promptforge/textopt/textopt.hpp"

namespace promptforge::textopt {

FeedbackBundle make_bundle(std::string prompt, const eval::PromptScore& evaluation,
                           const TaskDataset& dataset, std::vector<HistoryEntry> history) {
  FeedbackBundle bundle;
  bundle.prompt_under_review = std::move(prompt);
  bundle.score = evaluation.score;
  bundle.history = std::move(history);
  for (const auto& record : evaluation.records) {
    if (record.metric_value >= 1.0) continue;
    const TaskExample* example = dataset.find(record.example_id);
    if (example == nullptr) throw ContractError("record for unknown example " + record.example_id);
    bundle.error_cases.push_back({example->question, record.raw_output, record.extracted_answer, example->answer});
  }
  return bundle;
}

std::string format_error_cases(const std::vector<ErrorCase>& cases) {
  if (cases.empty()) return "(none)";
  std::string out;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const ErrorCase& c = cases[i];
    if (i > 0) out += "\n";
    out += "Example " + std::to_string(i + 1) + "\n";
    out += "Input: " + c.question + "\n";
    out += "Model output: " + c.raw_output + "\n";
    out += "Extracted answer: " + c.extracted + "\n";
    out += "Correct answer: " + c.gold + "\n";
  }
  return out;
}

std::string format_score(double score) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", score);
  return buf;
}

std::string format_history(const std::vector<HistoryEntry>& history) {
  if (history.empty()) return "(none)";
  std::string out;
  for (const auto& h : history) out += format_score(h.score) + " | " + h.prompt + "\n";
  return out;
}

std::vector<std::string> parse_prompts(std::string_view output, bool strict) {
  std::vector<std::string> prompts;
  bool fenced = false;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = output.find(kOpenTag, pos);
    if (open == std::string_view::npos) break;
    const std::size_t body = open + kOpenTag.size();
    const std::size_t close = output.find(kCloseTag, body);
    if (close == std::string_view::npos) break;
    fenced = true;
    std::string text = trim(output.substr(body, close - body));
    if (!text.empty()) prompts.push_back(std::move(text));
    pos = close + kCloseTag.size();
  }
  if (!fenced && !strict) {
    std::string whole = trim(output);
    if (!whole.empty()) prompts.push_back(std::move(whole));
  }
  return prompts;
}

int optimizer_call_bound(const OptimizerConfig& config) {
  switch (config.method) {
    case Method::ape: return 1 + config.pool_size;
    case Method::apo: return 2 * config.beam_width;
    case Method::pe2: return 1;
    case Method::textgrad: return 2;
    case Method::greater: return 0;
  }
  return 0;
}

namespace {

std::vector<Role> roles_of(Method method) {
  std::vector<Role> roles;
  for (const auto& [m, role] : template_roles()) {
    if (m == method) roles.push_back(role);
  }
  return roles;
}

OptimizerConfig checked(const OptimizerConfig& config) {
  validate(config);
  if (config.method == Method::greater) {
    throw ValidationError("method", "greater is not a textual-feedback method");
  }
  if (!config.optim_model) throw ValidationError("optim_model", "required for textual methods");
  return config;
}

}  // namespace

Session::Session(const OptimizerConfig& config, const TaskDataset& dataset, const RunHooks& hooks)
    : config_(checked(config)),
      dataset_(dataset),
      tracker_(config_, hooks),
      extraction_(eval::resolve_extraction(config_)) {
  for (Role role : roles_of(config_.method)) {
    MetaPromptTemplate tpl = MetaPromptTemplate::load(config_.method, role, config_.templates_dir);
    if (tpl.slots() != required_slots(role)) {
      std::string expected;
      for (const auto& s : required_slots(role)) expected += " {" + s + "}";
      throw ValidationError("templates_dir", MetaPromptTemplate::file_name(config_.method, role) +
                                                 " must use exactly the slots" + expected);
    }
    templates_.emplace(role, std::move(tpl));
  }
  const models::ClientContext context{&dataset_};
  task_ = models::make_client(config_.task_model, context);
  optimizer_ = models::make_client(*config_.optim_model, context);
  minibatch_ = eval::sample_minibatch(dataset_, effective_minibatch(config_, dataset_.size()), config_.seed);
}

const eval::PromptScore& Session::evaluate(const std::string& prompt) {
  auto it = cache_.find(prompt);
  if (it != cache_.end()) return it->second;
  eval::ScoreOptions options;
  options.workers = config_.eval_workers;
  options.generation = config_.task_model.generation;
  auto score = eval::score_prompt(prompt, dataset_, *task_, extraction_, config_.metric, minibatch_, options);
  return cache_.emplace(prompt, std::move(score)).first->second;
}

std::size_t Session::propose(int round, const std::string& text, const std::string& parent) {
  const double score = evaluate(text).score;
  return tracker_.add(round, text, score, round == 0 ? std::nullopt : std::optional<std::string>(parent));
}

std::optional<std::string> Session::ask(Role role, const std::map<std::string, std::string>& slots) {
  const std::string meta_prompt = templates_.at(role).render(slots);
  try {
    std::string out = optimizer_->generate(std::nullopt, meta_prompt, config_.optim_model->generation);
    ++successes_;
    return out;
  } catch (const TransportError& e) {
    failures_.push_back(std::string(to_string(role)) + ": " + e.what());
    tracker_.log(std::string("optimizer call failed (") + std::string(to_string(role)) + "): " + e.what());
    return std::nullopt;
  }
}

FeedbackBundle Session::bundle_for(const PromptCandidate& candidate, std::vector<HistoryEntry> history) {
  return make_bundle(candidate.text, evaluate(candidate.text), dataset_, std::move(history));
}

std::string Session::exemplars(int round) {
  Rng rng = Rng::derived(config_.seed, 0x65780000ULL + static_cast<std::uint64_t>(round));
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(config_.exemplars), dataset_.size());
  std::string out;
  for (std::size_t i : rng.sample_without_replacement(dataset_.size(), k)) {
    if (!out.empty()) out += "\n";
    out += "Input: " + dataset_[i].question + "\nOutput: " + dataset_[i].answer + "\n";
  }
  return out.empty() ? "(none)" : out;
}

OptimizationResult Session::finish() {
  if (optimizer_->calls() > 0 && successes_ == 0) {
    std::string detail;
    for (const auto& f : failures_) detail += "\n  " + f;
    throw RunError("every optimizer-model call failed (" + std::to_string(failures_.size()) + " calls):" + detail);
  }
  OptimizationResult& result = tracker_.result();
  result.best = tracker_.best();
  eval::ScoreOptions options;
  options.workers = config_.eval_workers;
  options.generation = config_.task_model.generation;
  auto full = eval::score_prompt(result.best.text, dataset_, *task_, extraction_, config_.metric, std::nullopt, options);
  result.final_score = full.score;
  result.records = std::move(full.records);
  result.calls.optimizer_calls = optimizer_->calls();
  result.calls.task_calls = task_->calls();
  check_invariants(result);
  return result;
}

}  // namespace promptforge::textopt
