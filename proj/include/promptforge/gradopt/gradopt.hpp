// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "promptforge/core/run.hpp"
#include "promptforge/core/types.hpp"
#include "promptforge/models/backend.hpp"

namespace promptforge::gradopt {

/// One example laid out as question, prompt, reasoning chain and extraction
/// prompt. The loss reads the gold answer at answer_position, which is the
/// end of formatted_ids.
struct ReasoningTrace {
  std::string example_id;
  std::string chain;
  std::vector<int> formatted_ids;
  models::PromptSpan prompt_span;
  std::size_t answer_position = 0;
  std::vector<int> gold_ids;
};

/// Greedy chains of at most `max_chain_tokens` tokens, stopped at the first
/// newline, for the examples named by `example_ids` in dataset order (all
/// examples when empty).
std::vector<ReasoningTrace> build_traces(const TaskDataset& dataset, const std::vector<std::string>& example_ids,
                                         std::string_view prompt, const models::DifferentiableBackend& backend,
                                         std::string_view extraction_prompt, int max_chain_tokens);

struct GradientEstimate {
  Eigen::MatrixXd grad;  // prompt_len x embedding_dim, mean over traces
  double loss = 0.0;     // mean loss over traces
};

/// Throws ContractError unless every trace carries the same prompt tokens.
GradientEstimate accumulate_gradients(const std::vector<ReasoningTrace>& traces,
                                      const models::DifferentiableBackend& backend, std::string_view loss);

/// Exact mean loss over the traces, no backward pass.
double mean_loss(const std::vector<ReasoningTrace>& traces, const models::DifferentiableBackend& backend,
                 std::string_view loss);

struct TokenCandidate {
  int token_id = 0;
  double score = 0.0;
};

struct TokenCandidateSet {
  std::size_t position = 0;
  std::vector<TokenCandidate> candidates;  // score descending, ties by token id
};

/// First-order token proposals for one prompt position.
///
/// score(t) = -(e_t - e_current) . g, the linearised loss decrease of swapping
/// the current token for t. Returns the top_k best tokens other than the
/// current one (fewer if the vocabulary is smaller).
template <typename GradRow, typename Table>
TokenCandidateSet propose_tokens(std::size_t position, const Eigen::MatrixBase<GradRow>& grad_row, int current_token,
                                 const Eigen::MatrixBase<Table>& embedding_table, int top_k) {
  using Scalar = typename Table::Scalar;
  eigen_assert(grad_row.size() == embedding_table.cols());
  const Eigen::Index vocab = embedding_table.rows();
  // Row or column vector alike.
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> g = grad_row.derived().reshaped().template cast<Scalar>();
  // Differences are formed before the product so the current token scores exactly 0.
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> scores =
      -((embedding_table.rowwise() - embedding_table.row(current_token)) * g);

  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(vocab));
  for (Eigen::Index t = 0; t < vocab; ++t) {
    if (t != current_token) ids.push_back(static_cast<int>(t));
  }
  const std::size_t k = std::min(ids.size(), static_cast<std::size_t>(std::max(top_k, 0)));
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(), [&](int a, int b) {
    return scores(a) != scores(b) ? scores(a) > scores(b) : a < b;
  });
  TokenCandidateSet set;
  set.position = position;
  for (std::size_t i = 0; i < k; ++i) set.candidates.push_back({ids[i], static_cast<double>(scores(ids[i]))});
  return set;
}

struct Verification {
  std::optional<int> accepted;
  double loss = 0.0;  // mean loss after the step (unchanged when nothing is accepted)
  /// Exact loss of every candidate that passed the re-tokenization check.
  std::vector<std::pair<int, double>> evaluated;
};

/// Exact-loss check of each proposal against the current prompt, reusing the
/// traces' chains. Accepts the lowest-loss candidate when it is strictly
/// below `current_loss`. Candidates whose prompt does not survive a
/// detokenize/tokenize round trip are skipped.
Verification substitute_and_verify(const TokenCandidateSet& proposals, const std::vector<ReasoningTrace>& traces,
                                   const models::DifferentiableBackend& backend, std::string_view loss,
                                   double current_loss);

/// Positions to visit in round `round_index` (0-based). Each cycle of
/// ceil(prompt_len / positions_per_round) rounds walks one seeded permutation
/// of all positions.
std::vector<std::size_t> position_schedule(std::size_t prompt_len, int positions_per_round, int round_index,
                                           std::uint64_t seed);

/// Replaces the prompt tokens of every trace.
void set_prompt(std::vector<ReasoningTrace>& traces, const std::vector<int>& prompt_ids);

/// Runs the gradient-guided token search from `p_init`.
OptimizationResult optimize(const OptimizerConfig& config, const TaskDataset& dataset, const std::string& p_init,
                            const RunHooks& hooks = {});

}  // namespace promptforge::gradopt
