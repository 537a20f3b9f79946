// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <map>

#include "promptforge/core/error.hpp"
#include "promptforge/eval/harness.hpp"
#include "promptforge/gradopt/gradopt.hpp"
#include "promptforge/models/client.hpp"

namespace promptforge::gradopt {

namespace {

void require_representable(const models::DifferentiableBackend& backend, std::string_view text,
                           const std::string& field, const std::string& what) {
  if (!backend.can_represent(text)) {
    throw ValidationError(field, what + " contains characters the local tokenizer cannot represent");
  }
}

// Everything the token search touches is checked before the first forward pass.
void validate_inputs(const OptimizerConfig& config, const TaskDataset& dataset, const std::string& p_init,
                     const models::DifferentiableBackend& backend) {
  if (p_init.empty()) throw ValidationError("p_init", "the gradient optimizer needs a non-empty prompt");
  require_representable(backend, p_init, "p_init", "the initial prompt");
  if (backend.tokenize(backend.detokenize(backend.tokenize(p_init))) != backend.tokenize(p_init)) {
    throw ValidationError("p_init", "the initial prompt does not survive a tokenizer round trip");
  }
  require_representable(backend, config.extraction_prompt, "extraction_prompt", "the extraction prompt");
  for (const auto& ex : dataset) {
    require_representable(backend, ex.question, "dataset", "example " + ex.id + " question");
    require_representable(backend, ex.answer, "dataset", "example " + ex.id + " answer");
  }
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

OptimizationResult optimize(const OptimizerConfig& config, const TaskDataset& dataset, const std::string& p_init,
                            const RunHooks& hooks) {
  validate(config);
  if (config.method != Method::greater) throw ValidationError("method", "expected greater");

  // One backend for gradients and losses, a second one inside the client that
  // scores prompts, so neither is used from two places at once.
  std::unique_ptr<models::DifferentiableBackend> backend = models::make_backend(config.task_model);
  validate_inputs(config, dataset, p_init, *backend);
  const models::ClientContext context{&dataset};
  auto scorer = models::make_client(config.task_model, context);
  const eval::ExtractionSpec extraction = eval::resolve_extraction(config);
  const std::vector<std::string> minibatch =
      eval::sample_minibatch(dataset, effective_minibatch(config, dataset.size()), config.seed);

  eval::ScoreOptions score_options;
  score_options.generation = config.task_model.generation;
  score_options.chain_max_tokens = config.max_chain_tokens;
  std::map<std::string, eval::PromptScore> scores;
  const auto score_of = [&](const std::string& text) -> const eval::PromptScore& {
    auto it = scores.find(text);
    if (it == scores.end()) {
      it = scores.emplace(text, eval::score_prompt(text, dataset, *scorer, extraction, config.metric, minibatch,
                                                   score_options)).first;
    }
    return it->second;
  };
  const auto traces_for = [&](const std::string& text) {
    return build_traces(dataset, minibatch, text, *backend, config.extraction_prompt, config.max_chain_tokens);
  };

  RunTracker tracker(config, hooks);
  std::vector<int> prompt = backend->tokenize(p_init);
  std::vector<ReasoningTrace> traces = traces_for(p_init);
  double loss = mean_loss(traces, *backend, config.loss);

  tracker.begin_round(0);
  {
    const std::size_t i = tracker.add(0, p_init, score_of(p_init).score);
    PromptCandidate& c = tracker.candidate(0, i);
    c.loss = loss;
    c.token_ids = prompt;
    c.selected = true;
  }
  tracker.commit_round(0);
  std::string parent = tracker.pool(0).front().id;

  std::vector<SubstitutionRecord> substitutions;
  for (int round = 1; round <= config.rounds; ++round) {
    tracker.begin_round(round);
    GradientEstimate estimate = accumulate_gradients(traces, *backend, config.loss);
    for (std::size_t position :
         position_schedule(prompt.size(), config.positions_per_round, round - 1, config.seed)) {
      const auto proposals =
          propose_tokens(position, estimate.grad.row(static_cast<Eigen::Index>(position)), prompt[position],
                         backend->embedding_table(), config.top_k_tokens);
      const Verification v = substitute_and_verify(proposals, traces, *backend, config.loss, loss);
      if (!v.accepted) continue;
      substitutions.push_back({round, position, *v.accepted, loss, v.loss});
      tracker.log("round " + std::to_string(round) + " position " + std::to_string(position) + " -> token " +
                  std::to_string(*v.accepted) + ", loss " + fmt(loss) + " -> " + fmt(v.loss));
      prompt[position] = *v.accepted;
      loss = v.loss;
      set_prompt(traces, prompt);
      estimate = accumulate_gradients(traces, *backend, config.loss);
    }

    // Fresh chains for the new prompt: they define its recorded loss and are
    // the context of the next round.
    const std::string text = backend->detokenize(prompt);
    traces = traces_for(text);
    loss = mean_loss(traces, *backend, config.loss);

    const std::size_t i = tracker.add(round, text, score_of(text).score, parent);
    PromptCandidate& c = tracker.candidate(round, i);
    c.loss = loss;
    c.token_ids = prompt;
    c.selected = true;
    parent = c.id;
    tracker.commit_round(round);
  }

  OptimizationResult& result = tracker.result();
  result.best = tracker.best();
  result.substitutions = std::move(substitutions);
  eval::ScoreOptions full_options = score_options;
  auto full = eval::score_prompt(result.best.text, dataset, *scorer, extraction, config.metric, std::nullopt,
                                 full_options);
  result.final_score = full.score;
  result.records = std::move(full.records);
  result.calls.task_calls = scorer->calls();
  result.calls.forward_passes = backend->forward_passes();
  check_invariants(result);
  return result;
}

}  // namespace promptforge::gradopt
