// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/models/client.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <set>
#include <thread>

#include <httplib.h>

#include "promptforge/core/error.hpp"

namespace promptforge::models {

using nlohmann::json;

std::string_view to_string(Transport t) {
  switch (t) {
    case Transport::http_api: return "http_api";
    case Transport::local_runtime: return "local_runtime";
    case Transport::scripted_mock: return "scripted_mock";
  }
  return "unknown";
}

std::string strip_at_stop(std::string text, const std::vector<std::string>& stop_sequences) {
  std::size_t cut = text.size();
  for (const auto& stop : stop_sequences) {
    if (stop.empty()) continue;
    cut = std::min(cut, text.find(stop));
  }
  text.resize(cut);
  return text;
}

std::string GenerativeClient::generate(const std::optional<std::string>& system,
                                       std::string_view user, const GenerationParams& params) {
  calls_.fetch_add(1);
  return strip_at_stop(complete(system, user, params), params.stop_sequences);
}

// ---------------------------------------------------------------------------
// Scripted mock

namespace {

template <typename T>
T option(const json& options, const char* key, T fallback) {
  if (!options.contains(key)) return fallback;
  try {
    return options.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("options.") + key, e.what());
  }
}

ScriptedMockLM::Behavior parse_behavior(std::string_view identifier) {
  constexpr std::string_view prefix = "mock:";
  if (identifier.substr(0, prefix.size()) != prefix) {
    throw ValidationError("identifier", "mock identifiers start with 'mock:'");
  }
  const auto name = identifier.substr(prefix.size());
  if (name == "echo") return ScriptedMockLM::Behavior::echo;
  if (name == "canned") return ScriptedMockLM::Behavior::canned;
  if (name == "planted" || name == "planted_keyword") return ScriptedMockLM::Behavior::planted_keyword;
  if (name == "sequence") return ScriptedMockLM::Behavior::sequence;
  throw ValidationError("identifier", "unknown mock behavior '" + std::string(name) +
                                          "' (expected echo, canned, planted or sequence)");
}

}  // namespace

ScriptedMockLM::ScriptedMockLM(ModelRef model, const TaskDataset* dataset)
    : GenerativeClient(model), behavior_(parse_behavior(model.identifier)) {
  const json& o = model.options;
  if (!o.is_object()) throw ValidationError("options", "must be an object");
  static const std::set<std::string> known = {"table",   "fallback",    "keyword",     "gold",
                                              "answers", "wrong_answer", "responses",  "routes",
                                              "cycle",   "delay_ms",    "fail_first", "fail_always",
                                              "retry_base_ms"};
  for (const auto& [k, v] : o.items()) {
    if (!known.count(k)) throw ValidationError("options." + k, "unknown mock option");
  }
  fallback_ = option<std::string>(o, "fallback", "");
  delay_ms_ = option<int>(o, "delay_ms", 0);
  fail_first_ = option<int>(o, "fail_first", 0);
  fail_always_ = option<bool>(o, "fail_always", false);
  cycle_ = option<bool>(o, "cycle", false);

  switch (behavior_) {
    case Behavior::echo:
      break;
    case Behavior::canned:
      table_ = option<std::map<std::string, std::string, std::less<>>>(o, "table", {});
      break;
    case Behavior::planted_keyword: {
      keyword_ = option<std::string>(o, "keyword", "");
      if (keyword_.empty()) throw ValidationError("options.keyword", "planted mock needs a keyword");
      if (o.contains("gold")) gold_ = option<std::string>(o, "gold", "");
      wrong_answer_ = option<std::string>(o, "wrong_answer", "0");
      if (o.contains("answers")) {
        const json& a = o.at("answers");
        if (a.is_string() && a.get<std::string>() == "dataset") {
          if (!dataset) throw ValidationError("options.answers", "no dataset available to the mock");
          for (const auto& ex : *dataset) answers_.emplace_back(ex.question, ex.answer);
        } else if (a.is_object()) {
          for (const auto& [q, ans] : a.items()) {
            if (!ans.is_string()) throw ValidationError("options.answers." + q, "must be a string");
            answers_.emplace_back(q, ans.get<std::string>());
          }
        } else {
          throw ValidationError("options.answers", "expected an object or \"dataset\"");
        }
      }
      if (!gold_ && answers_.empty()) {
        throw ValidationError("options.gold", "planted mock needs gold or answers");
      }
      std::stable_sort(answers_.begin(), answers_.end(), [](const auto& x, const auto& y) {
        return x.first.size() > y.first.size();
      });
      break;
    }
    case Behavior::sequence: {
      default_script_.responses = option<std::vector<std::string>>(o, "responses", {});
      if (o.contains("routes")) {
        const json& r = o.at("routes");
        if (!r.is_array()) throw ValidationError("options.routes", "must be a list");
        for (std::size_t i = 0; i < r.size(); ++i) {
          const std::string f = "options.routes." + std::to_string(i);
          if (!r[i].is_object() || !r[i].contains("when") || !r[i].contains("responses")) {
            throw ValidationError(f, "expected {\"when\": text, \"responses\": [text]}");
          }
          try {
            routes_.push_back({r[i].at("when").get<std::string>(),
                               r[i].at("responses").get<std::vector<std::string>>(), 0});
          } catch (const json::exception& e) {
            throw ValidationError(f, e.what());
          }
        }
      }
      break;
    }
  }
}

std::string ScriptedMockLM::next_from(Script& script) {
  if (script.responses.empty()) return fallback_;
  std::size_t i = script.cursor++;
  if (i >= script.responses.size()) {
    i = cycle_ ? i % script.responses.size() : script.responses.size() - 1;
  }
  return script.responses[i];
}

std::string ScriptedMockLM::planted(std::string_view user) const {
  std::string_view rest = user;
  std::optional<std::string> gold = gold_;
  for (const auto& [question, answer] : answers_) {
    if (user.substr(0, question.size()) == question) {
      rest = user.substr(question.size());
      gold = answer;
      break;
    }
  }
  if (gold && rest.find(keyword_) != std::string_view::npos) return *gold;
  return wrong_answer_;
}

std::string ScriptedMockLM::complete(const std::optional<std::string>& /*system*/,
                                     std::string_view user, const GenerationParams& /*params*/) {
  if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
  std::lock_guard lock(mutex_);
  if (fail_always_) throw TransportError("scripted failure", 1);
  if (failures_served_ < fail_first_) {
    ++failures_served_;
    throw TransportError("scripted failure " + std::to_string(failures_served_), 1);
  }
  switch (behavior_) {
    case Behavior::echo:
      return std::string(user);
    case Behavior::canned: {
      auto it = table_.find(user);
      return it == table_.end() ? fallback_ : it->second;
    }
    case Behavior::planted_keyword:
      return planted(user);
    case Behavior::sequence:
      for (auto& route : routes_) {
        if (user.find(route.when) != std::string_view::npos) return next_from(route);
      }
      return next_from(default_script_);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Local runtime

LocalRuntimeClient::LocalRuntimeClient(ModelRef model, std::unique_ptr<DifferentiableBackend> backend)
    : GenerativeClient(std::move(model)), backend_(std::move(backend)) {}

std::string LocalRuntimeClient::complete(const std::optional<std::string>& system,
                                         std::string_view user, const GenerationParams& params) {
  std::string context = system ? *system + "\n" : std::string();
  context += user;
  std::lock_guard lock(mutex_);
  const std::vector<int> ids = backend_->tokenize(context);
  DecodeOptions opts;
  opts.max_new_tokens = params.max_new_tokens;
  opts.temperature = params.temperature;
  opts.seed = params.seed;
  if (!params.stop_sequences.empty()) {
    opts.should_stop = [this, &params](std::span<const int> generated) {
      const std::string text = backend_->detokenize(generated);
      for (const auto& stop : params.stop_sequences) {
        if (!stop.empty() && text.size() >= stop.size() &&
            text.compare(text.size() - stop.size(), stop.size(), stop) == 0) {
          return true;
        }
      }
      return false;
    };
  }
  return backend_->detokenize(backend_->generate(ids, opts));
}

// ---------------------------------------------------------------------------
// HTTP chat

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

HttpChatClient::HttpChatClient(ModelRef model) : GenerativeClient(model) {
  api_key_ = env_or("PROMPTFORGE_API_KEY", "");
  if (api_key_.empty()) {
    throw ConfigurationError("PROMPTFORGE_API_KEY",
                             "PROMPTFORGE_API_KEY is not set; remote model '" + model.identifier +
                                 "' needs credentials");
  }
  std::string base = env_or("PROMPTFORGE_API_BASE", "https://api.openai.com/v1");
  while (!base.empty() && base.back() == '/') base.pop_back();
  const auto scheme_end = base.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigurationError("PROMPTFORGE_API_BASE", "PROMPTFORGE_API_BASE must start with http:// or https://");
  }
  const auto path_start = base.find('/', scheme_end + 3);
  base_ = base.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? std::string() : base.substr(path_start);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (base_.rfind("https://", 0) == 0) {
    throw ConfigurationError("PROMPTFORGE_API_BASE", "this build has no TLS support; use an http:// endpoint");
  }
#endif
  retry_base_ms_ = option<int>(model.options, "retry_base_ms", 500);
  timeout_s_ = option<int>(model.options, "timeout_s", 60);
}

std::string HttpChatClient::complete(const std::optional<std::string>& system, std::string_view user,
                                     const GenerationParams& params) {
  json messages = json::array();
  if (system) messages.push_back({{"role", "system"}, {"content", *system}});
  messages.push_back({{"role", "user"}, {"content", std::string(user)}});
  json body = {{"model", model().identifier},
               {"messages", messages},
               {"temperature", params.temperature},
               {"max_tokens", params.max_new_tokens},
               {"seed", params.seed}};
  if (!params.stop_sequences.empty()) body["stop"] = params.stop_sequences;
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(std::chrono::milliseconds(retry_base_ms_ << (attempt - 2)));
    }
    httplib::Client cli(base_);
    cli.set_connection_timeout(timeout_s_);
    cli.set_read_timeout(timeout_s_);
    cli.set_bearer_token_auth(api_key_);
    auto res = cli.Post(path_prefix_ + "/chat/completions", payload, "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500),
                           attempt, false);
    }
    try {
      const json reply = json::parse(res->body);
      const json& content = reply.at("choices").at(0).at("message").at("content");
      return content.is_null() ? std::string() : content.get<std::string>();
    } catch (const json::exception& e) {
      throw TransportError(std::string("malformed completion response: ") + e.what(), attempt, false);
    }
  }
  throw TransportError(last_error + " after " + std::to_string(kMaxAttempts) + " attempts",
                       kMaxAttempts);
}

// ---------------------------------------------------------------------------

std::unique_ptr<DifferentiableBackend> make_backend(const ModelRef& model) {
  if (model.kind != ModelKind::local) {
    throw ValidationError("task_model.kind", "a differentiable backend needs a local model");
  }
  return load_local_model(model.identifier);
}

std::unique_ptr<GenerativeClient> make_client(const ModelRef& model, const ClientContext& context) {
  if (model.kind == ModelKind::local) {
    auto backend = make_backend(model);
    return std::make_unique<LocalRuntimeClient>(model, std::move(backend));
  }
  if (model.identifier.rfind("mock:", 0) == 0) {
    return std::make_unique<ScriptedMockLM>(model, context.dataset);
  }
  return std::make_unique<HttpChatClient>(model);
}

}  // namespace promptforge::models
