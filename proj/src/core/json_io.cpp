// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/core/json_io.hpp"

#include <set>

#include "promptforge/core/error.hpp"

namespace promptforge {

using nlohmann::json;

namespace {

template <typename T>
T get_field(const json& j, const std::string& key, const std::string& field) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(field.empty() ? key : field + "." + key, e.what());
  }
}

template <typename T>
struct unwrap_optional {
  using type = T;
};
template <typename T>
struct unwrap_optional<std::optional<T>> {
  using type = T;
};

template <typename T>
void read_opt(const json& j, const char* key, T& out, const std::string& prefix = {}) {
  if (j.contains(key) && !j.at(key).is_null()) {
    out = get_field<typename unwrap_optional<T>::type>(j, key, prefix);
  }
}

json opt_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json opt_to_json(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const ModelRef& m) {
  return json{{"kind", m.kind == ModelKind::local ? "local" : "api"},
              {"identifier", m.identifier},
              {"generation",
               {{"max_new_tokens", m.generation.max_new_tokens},
                {"temperature", m.generation.temperature},
                {"stop_sequences", m.generation.stop_sequences},
                {"seed", m.generation.seed}}},
              {"options", m.options}};
}

ModelRef model_ref_from_json(const json& j, const std::string& field) {
  ModelRef m;
  if (j.is_string()) {
    m.identifier = j.get<std::string>();
    return m;
  }
  if (!j.is_object()) throw ValidationError(field, "expected an object or identifier string");
  static const std::set<std::string> known = {"kind", "identifier", "generation", "options"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ValidationError(field + "." + k, "unknown key");
  }
  if (j.contains("kind")) {
    const auto kind = get_field<std::string>(j, "kind", field);
    if (kind == "api") {
      m.kind = ModelKind::api;
    } else if (kind == "local") {
      m.kind = ModelKind::local;
    } else {
      throw ValidationError(field + ".kind", "expected 'api' or 'local'");
    }
  }
  read_opt(j, "identifier", m.identifier, field);
  if (j.contains("generation")) {
    const auto& g = j.at("generation");
    const std::string gf = field + ".generation";
    read_opt(g, "max_new_tokens", m.generation.max_new_tokens, gf);
    read_opt(g, "temperature", m.generation.temperature, gf);
    read_opt(g, "stop_sequences", m.generation.stop_sequences, gf);
    read_opt(g, "seed", m.generation.seed, gf);
  }
  if (j.contains("options")) {
    if (!j.at("options").is_object()) throw ValidationError(field + ".options", "expected object");
    m.options = j.at("options");
  }
  return m;
}

json to_json(const OptimizerConfig& c) {
  json j{{"method", to_string(c.method)},
         {"task_model", to_json(c.task_model)},
         {"optim_model", c.optim_model ? to_json(*c.optim_model) : json(nullptr)},
         {"rounds", c.rounds},
         {"pool_size", c.pool_size},
         {"minibatch_size", c.minibatch_size ? json(*c.minibatch_size) : json(nullptr)},
         {"beam_width", c.beam_width},
         {"candidates_per_round", c.candidates_per_round},
         {"top_k_tokens", c.top_k_tokens},
         {"positions_per_round", c.positions_per_round},
         {"extraction_prompt", c.extraction_prompt},
         {"metric", c.metric},
         {"loss", c.loss},
         {"seed", c.seed},
         {"exemplars", c.exemplars},
         {"max_chain_tokens", c.max_chain_tokens},
         {"eval_workers", c.eval_workers},
         {"step_size", c.step_size},
         {"templates_dir", c.templates_dir}};
  j["extraction"] = c.extraction ? json{{"mode", to_string(c.extraction->mode)},
                                        {"payload", c.extraction->payload}}
                                 : json(nullptr);
  return j;
}

OptimizerConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config", "expected a JSON object");
  static const std::set<std::string> known = {
      "method",         "task_model",   "optim_model",       "rounds",
      "pool_size",      "minibatch_size", "beam_width",      "candidates_per_round",
      "top_k_tokens",   "positions_per_round", "extraction_prompt", "extraction",
      "metric",         "loss",         "seed",              "exemplars",
      "max_chain_tokens", "eval_workers", "step_size",       "templates_dir"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ValidationError(k, "unknown config key");
  }
  Method method = Method::ape;
  if (j.contains("method")) method = parse_method(get_field<std::string>(j, "method", ""));
  OptimizerConfig c = default_config(method);

  if (j.contains("task_model")) c.task_model = model_ref_from_json(j.at("task_model"), "task_model");
  if (j.contains("optim_model") && !j.at("optim_model").is_null()) {
    c.optim_model = model_ref_from_json(j.at("optim_model"), "optim_model");
  }
  read_opt(j, "rounds", c.rounds);
  read_opt(j, "pool_size", c.pool_size);
  if (j.contains("minibatch_size") && !j.at("minibatch_size").is_null()) {
    c.minibatch_size = get_field<int>(j, "minibatch_size", "");
  }
  read_opt(j, "beam_width", c.beam_width);
  read_opt(j, "candidates_per_round", c.candidates_per_round);
  read_opt(j, "top_k_tokens", c.top_k_tokens);
  read_opt(j, "positions_per_round", c.positions_per_round);
  read_opt(j, "extraction_prompt", c.extraction_prompt);
  if (j.contains("extraction") && !j.at("extraction").is_null()) {
    const auto& e = j.at("extraction");
    ExtractionChoice choice;
    choice.mode = parse_extraction_mode(get_field<std::string>(e, "mode", "extraction"));
    read_opt(e, "payload", choice.payload, "extraction");
    c.extraction = choice;
  }
  read_opt(j, "metric", c.metric);
  read_opt(j, "loss", c.loss);
  read_opt(j, "seed", c.seed);
  read_opt(j, "exemplars", c.exemplars);
  read_opt(j, "max_chain_tokens", c.max_chain_tokens);
  read_opt(j, "eval_workers", c.eval_workers);
  read_opt(j, "step_size", c.step_size);
  read_opt(j, "templates_dir", c.templates_dir);
  return c;
}

json to_json(const PromptCandidate& c) {
  json j{{"id", c.id},
         {"text", c.text},
         {"score", opt_to_json(c.score)},
         {"method", c.provenance.method},
         {"round", c.provenance.round},
         {"parent", opt_to_json(c.provenance.parent)},
         {"selected", c.selected}};
  j["token_ids"] = c.token_ids ? json(*c.token_ids) : json(nullptr);
  j["loss"] = opt_to_json(c.loss);
  return j;
}

PromptCandidate candidate_from_json(const json& j) {
  PromptCandidate c;
  c.id = j.at("id").get<std::string>();
  c.text = j.at("text").get<std::string>();
  read_opt(j, "score", c.score);
  c.provenance.method = j.at("method").get<std::string>();
  c.provenance.round = j.at("round").get<int>();
  read_opt(j, "parent", c.provenance.parent);
  read_opt(j, "selected", c.selected);
  read_opt(j, "token_ids", c.token_ids);
  read_opt(j, "loss", c.loss);
  return c;
}

json to_json(const EvaluationRecord& r) {
  return json{{"example_id", r.example_id},
              {"raw_output", r.raw_output},
              {"extracted_answer", r.extracted_answer},
              {"metric_value", r.metric_value},
              {"loss_value", opt_to_json(r.loss_value)},
              {"error", opt_to_json(r.error)}};
}

EvaluationRecord record_from_json(const json& j) {
  EvaluationRecord r;
  r.example_id = j.at("example_id").get<std::string>();
  r.raw_output = j.at("raw_output").get<std::string>();
  r.extracted_answer = j.at("extracted_answer").get<std::string>();
  r.metric_value = j.at("metric_value").get<double>();
  read_opt(j, "loss_value", r.loss_value);
  read_opt(j, "error", r.error);
  return r;
}

json to_json(const OptimizationResult& r) {
  json trajectory = json::array();
  for (const auto& p : r.trajectory) trajectory.push_back({{"round", p.round}, {"score", p.score}});
  json pools = json::array();
  for (const auto& pool : r.pools) {
    json cands = json::array();
    for (const auto& c : pool.candidates) cands.push_back(to_json(c));
    pools.push_back({{"round", pool.round}, {"candidates", cands}});
  }
  json records = json::array();
  for (const auto& rec : r.records) records.push_back(to_json(rec));
  json subs = json::array();
  for (const auto& s : r.substitutions) {
    subs.push_back({{"round", s.round},
                    {"position", s.position},
                    {"token_id", s.token_id},
                    {"loss_before", s.loss_before},
                    {"loss_after", s.loss_after}});
  }
  return json{{"best", to_json(r.best)},
              {"final_score", r.final_score},
              {"trajectory", trajectory},
              {"pools", pools},
              {"records", records},
              {"substitutions", subs},
              {"calls",
               {{"optimizer", r.calls.optimizer_calls},
                {"task", r.calls.task_calls},
                {"forward", r.calls.forward_passes}}},
              {"config", to_json(r.config)}};
}

OptimizationResult result_from_json(const json& j) {
  OptimizationResult r;
  r.best = candidate_from_json(j.at("best"));
  r.final_score = j.at("final_score").get<double>();
  for (const auto& p : j.at("trajectory")) {
    r.trajectory.push_back({p.at("round").get<int>(), p.at("score").get<double>()});
  }
  for (const auto& pool : j.at("pools")) {
    RoundPool rp;
    rp.round = pool.at("round").get<int>();
    for (const auto& c : pool.at("candidates")) rp.candidates.push_back(candidate_from_json(c));
    r.pools.push_back(std::move(rp));
  }
  for (const auto& rec : j.at("records")) r.records.push_back(record_from_json(rec));
  if (j.contains("substitutions")) {
    for (const auto& s : j.at("substitutions")) {
      r.substitutions.push_back({s.at("round").get<int>(), s.at("position").get<std::size_t>(),
                                 s.at("token_id").get<int>(), s.at("loss_before").get<double>(),
                                 s.at("loss_after").get<double>()});
    }
  }
  const auto& calls = j.at("calls");
  r.calls.optimizer_calls = calls.at("optimizer").get<std::uint64_t>();
  r.calls.task_calls = calls.at("task").get<std::uint64_t>();
  r.calls.forward_passes = calls.at("forward").get<std::uint64_t>();
  r.config = config_from_json(j.at("config"));
  return r;
}

json trajectory_line(int round, double best_score, const std::string& best_prompt) {
  return json{{"round", round}, {"best_score", best_score}, {"best_prompt", best_prompt}};
}

}  // namespace promptforge
