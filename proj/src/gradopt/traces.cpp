// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/core/error.hpp"
#include "promptforge/core/random.hpp"
#include "promptforge/eval/harness.hpp"
#include "promptforge/gradopt/gradopt.hpp"

namespace promptforge::gradopt {

namespace {

std::vector<int> concat(std::initializer_list<const std::vector<int>*> parts) {
  std::vector<int> out;
  for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}

}  // namespace

std::vector<ReasoningTrace> build_traces(const TaskDataset& dataset, const std::vector<std::string>& example_ids,
                                         std::string_view prompt, const models::DifferentiableBackend& backend,
                                         std::string_view extraction_prompt, int max_chain_tokens) {
  std::vector<const TaskExample*> chosen;
  for (const auto& ex : dataset) {
    if (example_ids.empty() || std::find(example_ids.begin(), example_ids.end(), ex.id) != example_ids.end()) {
      chosen.push_back(&ex);
    }
  }
  const std::vector<int> newline = backend.tokenize("\n");
  const std::vector<int> prompt_ids = backend.tokenize(prompt);
  const std::vector<int> suffix = backend.tokenize(std::string("\n") + std::string(extraction_prompt));

  models::DecodeOptions decode;
  decode.max_new_tokens = max_chain_tokens;
  decode.should_stop = [&](std::span<const int> generated) {
    return !generated.empty() && generated.back() == newline.front();
  };

  std::vector<ReasoningTrace> traces;
  traces.reserve(chosen.size());
  for (const TaskExample* ex : chosen) {
    ReasoningTrace t;
    t.example_id = ex->id;
    const std::vector<int> question = backend.tokenize(ex->question + "\n");
    const std::vector<int> input = concat({&question, &prompt_ids, &newline});
    std::vector<int> chain = backend.generate(input, decode);
    if (!chain.empty() && chain.back() == newline.front()) chain.pop_back();
    t.chain = backend.detokenize(chain);
    t.formatted_ids = concat({&input, &chain, &suffix});
    t.prompt_span = {question.size(), question.size() + prompt_ids.size()};
    t.answer_position = t.formatted_ids.size();
    t.gold_ids = backend.tokenize(ex->answer);
    traces.push_back(std::move(t));
  }
  return traces;
}

namespace {

std::span<const int> prompt_of(const ReasoningTrace& t) {
  return std::span<const int>(t.formatted_ids).subspan(t.prompt_span.start, t.prompt_span.size());
}

void require_shared_prompt(const std::vector<ReasoningTrace>& traces) {
  if (traces.empty()) throw ContractError("no reasoning traces");
  const auto first = prompt_of(traces.front());
  for (const auto& t : traces) {
    const auto p = prompt_of(t);
    if (!std::equal(p.begin(), p.end(), first.begin(), first.end())) {
      throw ContractError("trace " + t.example_id + " carries a different prompt tokenization");
    }
  }
}

}  // namespace

GradientEstimate accumulate_gradients(const std::vector<ReasoningTrace>& traces,
                                      const models::DifferentiableBackend& backend, std::string_view loss) {
  require_shared_prompt(traces);
  GradientEstimate out;
  out.grad = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(traces.front().prompt_span.size()),
                                   backend.embedding_dim());
  for (const auto& t : traces) {
    const auto r = models::forward_loss(backend, t.formatted_ids, t.prompt_span, t.gold_ids, t.answer_position, loss);
    out.grad += r.prompt_grads;
    out.loss += r.loss;
  }
  const double n = static_cast<double>(traces.size());
  out.grad /= n;
  out.loss /= n;
  return out;
}

double mean_loss(const std::vector<ReasoningTrace>& traces, const models::DifferentiableBackend& backend,
                 std::string_view loss) {
  if (traces.empty()) throw ContractError("no reasoning traces");
  double total = 0.0;
  for (const auto& t : traces) {
    total += models::evaluate_loss(backend, t.formatted_ids, t.gold_ids, t.answer_position, loss);
  }
  return total / static_cast<double>(traces.size());
}

void set_prompt(std::vector<ReasoningTrace>& traces, const std::vector<int>& prompt_ids) {
  for (auto& t : traces) {
    if (prompt_ids.size() != t.prompt_span.size()) throw ContractError("prompt length changed");
    std::copy(prompt_ids.begin(), prompt_ids.end(),
              t.formatted_ids.begin() + static_cast<std::ptrdiff_t>(t.prompt_span.start));
  }
}

Verification substitute_and_verify(const TokenCandidateSet& proposals, const std::vector<ReasoningTrace>& traces,
                                   const models::DifferentiableBackend& backend, std::string_view loss,
                                   double current_loss) {
  require_shared_prompt(traces);
  const auto current = prompt_of(traces.front());
  if (proposals.position >= current.size()) throw IndexError("position outside the prompt");

  Verification v;
  v.loss = current_loss;
  std::vector<ReasoningTrace> trial = traces;
  for (const auto& cand : proposals.candidates) {
    std::vector<int> ids(current.begin(), current.end());
    ids[proposals.position] = cand.token_id;
    if (backend.tokenize(backend.detokenize(ids)) != ids) continue;
    set_prompt(trial, ids);
    const double l = mean_loss(trial, backend, loss);
    v.evaluated.emplace_back(cand.token_id, l);
    if (l < v.loss) {
      v.loss = l;
      v.accepted = cand.token_id;
    }
  }
  return v;
}

std::vector<std::size_t> position_schedule(std::size_t prompt_len, int positions_per_round, int round_index,
                                           std::uint64_t seed) {
  if (prompt_len == 0) throw ContractError("position_schedule needs a non-empty prompt");
  const std::size_t per_round = std::min(prompt_len, static_cast<std::size_t>(std::max(positions_per_round, 1)));
  const std::size_t rounds_per_cycle = (prompt_len + per_round - 1) / per_round;
  const auto round = static_cast<std::size_t>(round_index);
  const std::size_t cycle = round / rounds_per_cycle;
  const std::size_t offset = (round % rounds_per_cycle) * per_round;

  std::vector<std::size_t> perm(prompt_len);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = Rng::derived(seed ^ 0x706f73ULL, cycle);
  rng.shuffle(perm);
  const std::size_t end = std::min(prompt_len, offset + per_round);
  return {perm.begin() + static_cast<std::ptrdiff_t>(offset), perm.begin() + static_cast<std::ptrdiff_t>(end)};
}

}  // namespace promptforge::gradopt
