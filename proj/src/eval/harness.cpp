// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/eval/harness.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <mutex>
#include <set>
#include <thread>

#include "promptforge/core/error.hpp"
#include "promptforge/core/random.hpp"
#include "promptforge/core/registry.hpp"

namespace promptforge::eval {

std::string compose_task_input(std::string_view question, std::string_view prompt) {
  std::string out;
  out.reserve(question.size() + prompt.size() + 2);
  out += question;
  out += '\n';
  out += prompt;
  out += '\n';
  return out;
}

namespace {

struct Outcome {
  std::string raw;
  std::string extracted;
  std::optional<std::string> error;
};

Outcome run_example(const TaskExample& ex, std::string_view prompt, models::GenerativeClient& client,
                    const ExtractionSpec& extraction, const ScoreOptions& options) {
  const GenerationParams& params = options.generation;
  Outcome out;
  try {
    const std::string input = compose_task_input(ex.question, prompt);
    if (extraction.mode() == ExtractionMode::extraction_prompt) {
      GenerationParams line = params;
      line.stop_sequences.push_back("\n");
      GenerationParams chain = line;
      if (options.chain_max_tokens) chain.max_new_tokens = *options.chain_max_tokens;
      out.raw = client.generate(std::nullopt, input, chain);
      const std::string continuation =
          client.generate(std::nullopt, input + out.raw + "\n" + extraction.payload(), line);
      out.extracted = extract_answer(continuation, extraction);
    } else {
      out.raw = client.generate(std::nullopt, input, params);
      out.extracted = extract_answer(out.raw, extraction);
    }
  } catch (const ConfigurationError&) {
    throw;
  } catch (const CancelledError&) {
    throw;
  } catch (const TransportError& e) {
    out.error = e.what();
  } catch (const ValidationError& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace

PromptScore score_prompt(std::string_view prompt, const TaskDataset& dataset,
                         models::GenerativeClient& client, const ExtractionSpec& extraction,
                         std::string_view metric_name,
                         const std::optional<std::vector<std::string>>& subset,
                         const ScoreOptions& options) {
  const Metric& metric = MetricRegistry::global().resolve(metric_name);

  std::vector<const TaskExample*> chosen;
  if (subset) {
    std::set<std::string, std::less<>> wanted(subset->begin(), subset->end());
    for (const auto& id : wanted) {
      if (!dataset.find(id)) throw ValidationError("subset", "unknown example id '" + id + "'");
    }
    for (const auto& ex : dataset) {
      if (wanted.count(ex.id)) chosen.push_back(&ex);
    }
  } else {
    for (const auto& ex : dataset) chosen.push_back(&ex);
  }
  if (chosen.empty()) throw ValidationError("subset", "no examples selected");

  std::vector<Outcome> outcomes(chosen.size());
  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.workers, 1)), 1, chosen.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      outcomes[i] = run_example(*chosen[i], prompt, client, extraction, options);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < chosen.size(); i = next++) {
          try {
            outcomes[i] = run_example(*chosen[i], prompt, client, extraction, options);
          } catch (...) {
            std::lock_guard lock(fatal_mutex);
            if (!fatal) fatal = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (fatal) std::rethrow_exception(fatal);
  }

  PromptScore result;
  double total = 0.0;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    EvaluationRecord rec;
    rec.example_id = chosen[i]->id;
    rec.raw_output = std::move(outcomes[i].raw);
    rec.extracted_answer = std::move(outcomes[i].extracted);
    if (outcomes[i].error) {
      rec.error = outcomes[i].error;
      ++result.failures;
    } else {
      rec.metric_value = metric(rec.extracted_answer, chosen[i]->answer);
    }
    total += rec.metric_value;
    result.records.push_back(std::move(rec));
  }
  if (result.failures == result.records.size()) {
    throw RunError("every example failed to evaluate; first error: " + *result.records.front().error);
  }
  result.score = total / static_cast<double>(result.records.size());
  return result;
}

std::vector<std::string> sample_minibatch(const TaskDataset& dataset, std::size_t size,
                                          std::uint64_t seed) {
  Rng rng = Rng::derived(seed, 0x6d696e69ULL);
  std::vector<std::string> ids;
  for (std::size_t i : rng.sample_without_replacement(dataset.size(), size)) ids.push_back(dataset[i].id);
  return ids;
}

}  // namespace promptforge::eval
