// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/core/json_io.hpp"
#include "promptforge/core/registry.hpp"
#include "promptforge/service/server.hpp"

namespace promptforge::service {

using nlohmann::json;

namespace {

json integer(const char* name, int def, int minimum, const char* help) {
  return {{"name", name}, {"type", "integer"}, {"default", def}, {"minimum", minimum}, {"description", help}};
}

json model(const char* name, const ModelRef& def, bool required, const char* help) {
  return {{"name", name},
          {"type", "model"},
          {"default", to_json(def)},
          {"required", required},
          {"kinds", def.kind == ModelKind::local ? json{"local"} : json{"api", "local"}},
          {"description", help}};
}

json method_entry(Method m) {
  const OptimizerConfig d = default_config(m);
  const bool textual = m != Method::greater;
  json params = json::array();
  params.push_back(model("task_model", d.task_model, true,
                         textual ? "model that answers the task" : "local weights directory of the model that answers the task"));
  if (textual) {
    ModelRef optim;
    params.push_back(model("optim_model", optim, true, "model that critiques and rewrites prompts"));
  }
  params.push_back(integer("rounds", d.rounds, 1, "optimization rounds"));
  params.push_back({{"name", "minibatch_size"},
                    {"type", "integer"},
                    {"default", nullptr},
                    {"minimum", 1},
                    {"nullable", true},
                    {"description", "examples scored per candidate; unset means min(16, dataset size)"}});
  switch (m) {
    case Method::ape:
      params.push_back(integer("pool_size", d.pool_size, 1, "candidates kept after each selection"));
      params.push_back(integer("candidates_per_round", d.candidates_per_round, 1, "prompts induced per round"));
      params.push_back(integer("exemplars", d.exemplars, 0, "input/output pairs shown to the optimizer"));
      break;
    case Method::apo:
      params.push_back(integer("beam_width", d.beam_width, 1, "prompts kept in the beam"));
      params.push_back(integer("candidates_per_round", d.candidates_per_round, 1, "edits proposed per beam member"));
      break;
    case Method::pe2:
      params.push_back(integer("candidates_per_round", d.candidates_per_round, 1, "refined prompts accepted per call"));
      params.push_back(integer("step_size", d.step_size, 1, "phrases the optimizer may change per round"));
      break;
    case Method::textgrad:
      break;
    case Method::greater:
      params.push_back(integer("top_k_tokens", d.top_k_tokens, 1, "token candidates verified per position"));
      params.push_back(integer("positions_per_round", d.positions_per_round, 1, "prompt positions visited per round"));
      params.push_back({{"name", "extraction_prompt"},
                        {"type", "string"},
                        {"default", d.extraction_prompt},
                        {"min_length", 1},
                        {"description", "text appended after the reasoning chain before the answer is read"}});
      params.push_back({{"name", "loss"},
                        {"type", "string"},
                        {"default", d.loss},
                        {"enum", LossRegistry::global().names()},
                        {"description", "loss on the gold answer tokens"}});
      params.push_back(integer("max_chain_tokens", d.max_chain_tokens, 0, "reasoning chain length cap"));
      break;
  }
  if (textual) {
    params.push_back({{"name", "templates_dir"},
                      {"type", "string"},
                      {"default", d.templates_dir},
                      {"description", "directory overriding the built-in meta-prompt templates"}});
  }
  params.push_back({{"name", "metric"},
                    {"type", "string"},
                    {"default", d.metric},
                    {"enum", MetricRegistry::global().names()},
                    {"description", "per-example score in [0, 1]"}});
  params.push_back({{"name", "extraction"},
                    {"type", "extraction"},
                    {"default", nullptr},
                    {"nullable", true},
                    {"modes", {"extraction_prompt", "regex", "last_number"}},
                    {"description", "how the answer is read from model output"}});
  params.push_back(integer("eval_workers", d.eval_workers, 1, "concurrent task-model calls while scoring"));
  params.push_back(integer("seed", 0, 0, "random seed"));

  static const std::map<Method, const char*> descriptions = {
      {Method::ape, "induces prompts from examples, keeps the best and paraphrases them"},
      {Method::apo, "beam search over prompt edits driven by critiques of failed examples"},
      {Method::pe2, "inspects errors and refines the prompt with the search history in view"},
      {Method::textgrad, "a critique of the prompt is applied as a rewrite, one successor per round"},
      {Method::greater, "gradient-guided token substitution through a local model"},
  };
  return {{"name", to_string(m)},
          {"description", descriptions.at(m)},
          {"requires_optim_model", textual},
          {"task_model_kinds", textual ? json{"api", "local"} : json{"local"}},
          {"parameters", params}};
}

}  // namespace

json optimizer_schemas() {
  json methods = json::array();
  for (Method m : kAllMethods) methods.push_back(method_entry(m));
  const char* key = std::getenv("PROMPTFORGE_API_KEY");
  return {{"optimizers", methods}, {"credentials_present", key != nullptr && *key != '\0'}};
}

}  // namespace promptforge::service
