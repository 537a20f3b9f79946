// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "promptforge/core/types.hpp"
#include "promptforge/models/backend.hpp"

namespace promptforge::models {

enum class Transport { http_api, local_runtime, scripted_mock };

std::string_view to_string(Transport t);

/// Text-in, text-out model handle. generate() may be called concurrently.
class GenerativeClient {
 public:
  explicit GenerativeClient(ModelRef model) : model_(std::move(model)) {}
  virtual ~GenerativeClient() = default;
  GenerativeClient(const GenerativeClient&) = delete;
  GenerativeClient& operator=(const GenerativeClient&) = delete;

  const ModelRef& model() const noexcept { return model_; }
  virtual Transport transport() const noexcept = 0;

  /// Decoded text, cut at the first stop sequence. Every call counts, failed
  /// ones included.
  std::string generate(const std::optional<std::string>& system, std::string_view user,
                       const GenerationParams& params);

  std::uint64_t calls() const noexcept { return calls_.load(); }

 protected:
  virtual std::string complete(const std::optional<std::string>& system, std::string_view user,
                               const GenerationParams& params) = 0;

 private:
  ModelRef model_;
  std::atomic<std::uint64_t> calls_{0};
};

inline std::string generate(GenerativeClient& client, const std::optional<std::string>& system,
                            std::string_view user, const GenerationParams& params) {
  return client.generate(system, user, params);
}

/// Truncates `text` at the earliest occurrence of any stop sequence.
std::string strip_at_stop(std::string text, const std::vector<std::string>& stop_sequences);

/// Deterministic test double selected by identifier "mock:<behavior>".
///
/// Behaviors and their `options` keys:
///   echo     returns the user text.
///   canned   `table` maps exact user text to a response; `fallback` otherwise.
///   planted  the user text is question + prompt; answers the gold answer iff
///            the part after the longest known question contains `keyword`.
///            Gold answers come from `answers` (question -> answer, or the
///            string "dataset" for the job's dataset) or a single `gold`;
///            `wrong_answer` (default "0") otherwise.
///   sequence `responses` are returned in call order; `routes` is a list of
///            {"when": substring, "responses": [...]} consulted first, each
///            with its own cursor. Exhausted lists repeat their last entry,
///            or wrap around when `cycle` is true.
/// Common keys: `delay_ms` sleeps per call; `fail_first` fails that many
/// calls; `fail_always` fails every call.
class ScriptedMockLM final : public GenerativeClient {
 public:
  enum class Behavior { echo, canned, planted_keyword, sequence };

  /// `dataset` backs `answers: "dataset"`; may be null otherwise.
  ScriptedMockLM(ModelRef model, const TaskDataset* dataset = nullptr);

  Transport transport() const noexcept override { return Transport::scripted_mock; }
  Behavior behavior() const noexcept { return behavior_; }

 protected:
  std::string complete(const std::optional<std::string>& system, std::string_view user,
                       const GenerationParams& params) override;

 private:
  struct Script {
    std::string when;
    std::vector<std::string> responses;
    std::size_t cursor = 0;
  };

  std::string next_from(Script& script);
  std::string planted(std::string_view user) const;

  Behavior behavior_;
  std::map<std::string, std::string, std::less<>> table_;
  std::string fallback_;
  std::string keyword_;
  std::optional<std::string> gold_;
  std::string wrong_answer_ = "0";
  std::vector<std::pair<std::string, std::string>> answers_;  // longest question first
  std::vector<Script> routes_;
  Script default_script_;
  bool cycle_ = false;
  int delay_ms_ = 0;
  int fail_first_ = 0;
  bool fail_always_ = false;

  std::mutex mutex_;
  int failures_served_ = 0;
};

/// Greedy or sampled decoding on a local differentiable backend.
class LocalRuntimeClient final : public GenerativeClient {
 public:
  LocalRuntimeClient(ModelRef model, std::unique_ptr<DifferentiableBackend> backend);

  Transport transport() const noexcept override { return Transport::local_runtime; }
  const DifferentiableBackend& backend() const noexcept { return *backend_; }

 protected:
  /// The context is system + "\n" + user when a system text is given.
  std::string complete(const std::optional<std::string>& system, std::string_view user,
                       const GenerationParams& params) override;

 private:
  std::unique_ptr<DifferentiableBackend> backend_;
  std::mutex mutex_;
};

/// OpenAI-compatible chat completions over HTTP(S).
///
/// Endpoint: $PROMPTFORGE_API_BASE (default https://api.openai.com/v1) plus
/// "/chat/completions", bearer token $PROMPTFORGE_API_KEY. Retriable
/// failures (connection errors, 429, 5xx) are retried up to 3 attempts with
/// exponential backoff starting at `options.retry_base_ms` (default 500).
class HttpChatClient final : public GenerativeClient {
 public:
  /// Throws ConfigurationError naming PROMPTFORGE_API_KEY when it is unset.
  explicit HttpChatClient(ModelRef model);

  Transport transport() const noexcept override { return Transport::http_api; }

  static constexpr int kMaxAttempts = 3;

 protected:
  std::string complete(const std::optional<std::string>& system, std::string_view user,
                       const GenerationParams& params) override;

 private:
  std::string base_;
  std::string path_prefix_;
  std::string api_key_;
  int retry_base_ms_ = 500;
  int timeout_s_ = 60;
};

struct ClientContext {
  const TaskDataset* dataset = nullptr;
};

/// "mock:*" identifiers give a ScriptedMockLM, other api identifiers an
/// HttpChatClient, and local models a LocalRuntimeClient over the weights
/// directory named by the identifier.
std::unique_ptr<GenerativeClient> make_client(const ModelRef& model, const ClientContext& context = {});

/// A fresh backend instance for a local model reference.
std::unique_ptr<DifferentiableBackend> make_backend(const ModelRef& model);

}  // namespace promptforge::models
