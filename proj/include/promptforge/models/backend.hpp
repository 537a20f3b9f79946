// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "promptforge/core/types.hpp"
#include "promptforge/models/tiny_transformer.hpp"
#include "promptforge/models/tokenizer.hpp"

namespace promptforge::models {

/// Maps logits to (loss, d loss / d logits).
using LogitObjective =
    std::function<std::pair<double, Eigen::MatrixXd>(const Eigen::MatrixXd& logits)>;

struct InputGradient {
  double loss = 0.0;
  Eigen::MatrixXd input_grad;  // one row per input position
};

struct DecodeOptions {
  int max_new_tokens = 128;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  /// Called after each new token with the tokens generated so far.
  std::function<bool(std::span<const int> generated)> should_stop;
};

/// A local model exposing logits and gradients with respect to input
/// embeddings. Instances are not safe for interleaved use from several
/// threads; give each concurrent job its own instance.
class DifferentiableBackend {
 public:
  virtual ~DifferentiableBackend() = default;

  virtual const ModelRef& model() const noexcept = 0;
  virtual int vocab_size() const noexcept = 0;
  virtual int embedding_dim() const noexcept = 0;

  virtual bool can_represent(std::string_view text) const = 0;
  virtual std::vector<int> tokenize(std::string_view text) const = 0;
  virtual std::string detokenize(std::span<const int> ids) const = 0;

  /// vocab_size x embedding_dim; stable for the backend's lifetime.
  virtual const Eigen::MatrixXd& embedding_table() const noexcept = 0;

  virtual Eigen::MatrixXd logits(const Eigen::MatrixXd& input_embeddings) const = 0;
  virtual InputGradient differentiate(const Eigen::MatrixXd& input_embeddings,
                                      const LogitObjective& objective) const = 0;
  /// Continues `context`; greedy when temperature is 0.
  virtual std::vector<int> generate(std::span<const int> context, const DecodeOptions& options) const = 0;

  Eigen::MatrixXd embed(std::span<const int> ids) const;

  std::uint64_t forward_passes() const noexcept { return forward_passes_.load(); }

 protected:
  void count_forward() const noexcept { forward_passes_.fetch_add(1); }

 private:
  mutable std::atomic<std::uint64_t> forward_passes_{0};
};

/// The shipped desk-scale model: character-level, 2 layers, 64 tokens, 16 dims.
class TinyReferenceBackend final : public DifferentiableBackend {
 public:
  TinyReferenceBackend(ModelRef model, CharTokenizer tokenizer, TinyTransformerConfig config,
                       TinyTransformerWeights<double> weights);

  const ModelRef& model() const noexcept override { return model_; }
  int vocab_size() const noexcept override { return net_.config().vocab_size; }
  int embedding_dim() const noexcept override { return net_.config().d_model; }

  bool can_represent(std::string_view text) const override { return tokenizer_.can_represent(text); }
  std::vector<int> tokenize(std::string_view text) const override { return tokenizer_.tokenize(text); }
  std::string detokenize(std::span<const int> ids) const override { return tokenizer_.detokenize(ids); }

  const Eigen::MatrixXd& embedding_table() const noexcept override {
    return net_.weights().token_embedding;
  }

  Eigen::MatrixXd logits(const Eigen::MatrixXd& input_embeddings) const override;
  InputGradient differentiate(const Eigen::MatrixXd& input_embeddings,
                              const LogitObjective& objective) const override;
  std::vector<int> generate(std::span<const int> context, const DecodeOptions& options) const override;

  const CharTokenizer& tokenizer() const noexcept { return tokenizer_; }
  const TinyTransformer<double>& network() const noexcept { return net_; }

 private:
  ModelRef model_;
  CharTokenizer tokenizer_;
  TinyTransformer<double> net_;
};

/// Seeded construction of the reference model (identical weights per seed).
TinyReferenceBackend tiny_reference_model(std::uint64_t seed);

/// Writes config.json + weights.json into `dir`.
void save_tiny_model(const TinyReferenceBackend& model, const std::uint64_t seed,
                     const std::filesystem::path& dir);

/// Loads a weights directory written by save_tiny_model.
std::unique_ptr<TinyReferenceBackend> load_local_model(const std::filesystem::path& dir);

inline const Eigen::MatrixXd& embedding_table(const DifferentiableBackend& backend) {
  return backend.embedding_table();
}

/// Half-open token range [start, end) of the prompt inside a sequence.
struct PromptSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - start; }
  bool operator==(const PromptSpan&) const = default;
};

struct ForwardLossResult {
  double loss = 0.0;
  Eigen::MatrixXd prompt_grads;  // (end - start) x embedding_dim
};

/// Loss of gold_ids read at the answer position, plus its gradient with
/// respect to the prompt-span embeddings.
///
/// The scored sequence is input_ids[0, answer_position) followed by all but
/// the last gold token (teacher forcing): the logits of position
/// answer_position - 1 + j are scored against gold_ids[j].
/// Requires 0 <= start < end <= answer_position <= |input_ids| and
/// answer_position >= 1; throws IndexError otherwise, RegistryError for an
/// unknown loss and ContractError for a loss without gradient.
ForwardLossResult forward_loss(const DifferentiableBackend& backend, std::span<const int> input_ids,
                               PromptSpan prompt_span, std::span<const int> gold_ids,
                               std::size_t answer_position, std::string_view loss_name);

/// Same, with the context given as embedding rows (answer_position rows are
/// used). Lets callers perturb embeddings off the token lattice.
ForwardLossResult forward_loss(const DifferentiableBackend& backend,
                               const Eigen::MatrixXd& context_embeddings, PromptSpan prompt_span,
                               std::span<const int> gold_ids, std::size_t answer_position,
                               std::string_view loss_name);

/// Loss only, without the backward pass.
double evaluate_loss(const DifferentiableBackend& backend, std::span<const int> input_ids,
                     std::span<const int> gold_ids, std::size_t answer_position,
                     std::string_view loss_name);

double evaluate_loss(const DifferentiableBackend& backend, const Eigen::MatrixXd& context_embeddings,
                     std::span<const int> gold_ids, std::size_t answer_position,
                     std::string_view loss_name);

}  // namespace promptforge::models
