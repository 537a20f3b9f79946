// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace promptforge {

/// One (question, answer) pair of the task dataset plus its seed prompt.
struct TaskExample {
  std::string id;
  std::string question;
  std::string prompt;
  std::string answer;
  /// Keys beyond id/question/prompt/answer, kept verbatim and ignored by optimizers.
  nlohmann::ordered_json extras = nlohmann::ordered_json::object();
};

/// Ordered, validated, immutable collection of task examples.
class TaskDataset {
 public:
  /// Throws ValidationError when empty, when an id repeats, or when a question
  /// or answer is blank after trimming.
  TaskDataset(std::string name, std::vector<TaskExample> examples);

  const std::string& name() const noexcept { return name_; }
  const std::vector<TaskExample>& examples() const noexcept { return examples_; }
  std::size_t size() const noexcept { return examples_.size(); }
  const TaskExample& operator[](std::size_t i) const { return examples_[i]; }

  /// nullptr when the id is unknown.
  const TaskExample* find(std::string_view id) const;

  auto begin() const noexcept { return examples_.begin(); }
  auto end() const noexcept { return examples_.end(); }

 private:
  std::string name_;
  std::vector<TaskExample> examples_;
};

enum class Method { ape, apo, pe2, textgrad, greater };

std::string_view to_string(Method m);
/// Throws ValidationError("method", ...) for unknown names.
Method parse_method(std::string_view name);
inline constexpr Method kAllMethods[] = {Method::ape, Method::apo, Method::pe2, Method::textgrad,
                                         Method::greater};

struct Provenance {
  std::string method;
  int round = 0;
  std::optional<std::string> parent;
};

struct PromptCandidate {
  std::string id;
  std::string text;
  std::optional<double> score;
  Provenance provenance;
  std::optional<std::vector<int>> token_ids;
  /// Mean task loss of this prompt (gradient optimizer only).
  std::optional<double> loss;
  /// Whether the candidate survived its round's selection step.
  bool selected = false;
};

/// Throws ContractError when the score leaves [0,1] or round/parent disagree.
void check_invariants(const PromptCandidate& c);

enum class ModelKind { api, local };

struct GenerationParams {
  int max_new_tokens = 256;
  double temperature = 0.0;
  std::vector<std::string> stop_sequences;
  std::uint64_t seed = 0;
};

/// Named handle to a remote generative model or a local differentiable one.
struct ModelRef {
  ModelKind kind = ModelKind::api;
  std::string identifier;
  GenerationParams generation;
  /// Transport-specific settings (mock behavior tables, retry timing).
  nlohmann::json options = nlohmann::json::object();
};

enum class ExtractionMode { extraction_prompt, regex, last_number };

std::string_view to_string(ExtractionMode m);
ExtractionMode parse_extraction_mode(std::string_view name);

/// Unvalidated extraction choice as carried by a config; eval::ExtractionSpec
/// is the validated form.
struct ExtractionChoice {
  ExtractionMode mode = ExtractionMode::regex;
  std::string payload;
};

struct OptimizerConfig {
  Method method = Method::ape;
  ModelRef task_model;
  std::optional<ModelRef> optim_model;

  int rounds = 5;
  int pool_size = 4;
  /// Unset means min(16, |D|); values above |D| are clamped.
  std::optional<int> minibatch_size;
  int beam_width = 4;
  int candidates_per_round = 4;
  int top_k_tokens = 8;
  int positions_per_round = 2;

  /// Suffix appended after the reasoning before the final answer is read.
  std::string extraction_prompt = "therefore, the final answer is ";
  std::optional<ExtractionChoice> extraction;
  std::string metric = "exact_match";
  std::string loss = "cross_entropy";
  std::uint64_t seed = 0;

  int exemplars = 3;
  int max_chain_tokens = 128;
  int eval_workers = 1;
  /// Upper bound on phrases PE2 may change per round.
  int step_size = 3;
  /// Empty selects the built-in meta-prompt templates.
  std::string templates_dir;
};

/// Method-specific defaults (gradient runs default to 10 rounds).
OptimizerConfig default_config(Method m);

/// Total check of every config invariant, including metric/loss resolvability.
/// Throws ValidationError naming the first offending field.
void validate(const OptimizerConfig& config);

/// Effective minibatch size for a dataset of `dataset_size` examples.
std::size_t effective_minibatch(const OptimizerConfig& config, std::size_t dataset_size);

struct EvaluationRecord {
  std::string example_id;
  std::string raw_output;
  std::string extracted_answer;
  double metric_value = 0.0;
  std::optional<double> loss_value;
  std::optional<std::string> error;
};

struct TrajectoryPoint {
  int round = 0;
  double score = 0.0;
};

struct RoundPool {
  int round = 0;
  std::vector<PromptCandidate> candidates;
};

/// One accepted token substitution of the gradient optimizer.
struct SubstitutionRecord {
  int round = 0;
  std::size_t position = 0;
  int token_id = 0;
  double loss_before = 0.0;
  double loss_after = 0.0;
};

struct CallCounts {
  std::uint64_t optimizer_calls = 0;
  std::uint64_t task_calls = 0;
  std::uint64_t forward_passes = 0;

  std::uint64_t total() const noexcept { return optimizer_calls + task_calls + forward_passes; }
};

struct OptimizationResult {
  PromptCandidate best;
  std::vector<TrajectoryPoint> trajectory;
  std::vector<RoundPool> pools;
  /// Per-example records of `best` over the full dataset.
  std::vector<EvaluationRecord> records;
  /// Mean metric of `best` over the full dataset.
  double final_score = 0.0;
  OptimizerConfig config;
  CallCounts calls;
  std::vector<SubstitutionRecord> substitutions;
};

/// Throws ContractError unless the trajectory is monotone and best.score is
/// the maximum score found in the pools.
void check_invariants(const OptimizationResult& r);

/// Strict ordering used whenever candidates are ranked: higher score first,
/// then earlier round, then earlier discovery index.
struct CandidateRank {
  double score;
  int round;
  std::size_t index;
};
bool ranks_before(const CandidateRank& a, const CandidateRank& b) noexcept;

std::string trim(std::string_view s);

}  // namespace promptforge
