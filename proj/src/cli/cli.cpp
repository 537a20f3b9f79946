// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/cli/cli.hpp"

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <pthread.h>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "promptforge/core/error.hpp"
#include "promptforge/core/json_io.hpp"
#include "promptforge/core/registry.hpp"
#include "promptforge/dataio/dataset_io.hpp"
#include "promptforge/eval/extraction.hpp"
#include "promptforge/eval/harness.hpp"
#include "promptforge/models/client.hpp"
#include "promptforge/optimize.hpp"
#include "promptforge/service/server.hpp"

namespace promptforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Bad input on the command line or in the files it names (exit 2).
struct UsageError : Error {
  using Error::Error;
};

std::string number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s = buf;
  // keep whole numbers recognisable as reals: 1 -> 1.0
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

/// One-line rendering for table cells.
std::string cell(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '\n') out += "\\n";
    else if (c == '\t') out += "\\t";
    else out += c;
  }
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config file " + path + " is not valid JSON: " + e.what());
  }
}

TaskDataset load_data(const std::string& path) {
  try {
    return dataio::load_jsonl(path);
  } catch (const IoError& e) {
    throw UsageError(e.what());
  }
}

/// Config file (if any) with the command-line method and seed applied on top.
OptimizerConfig build_config(const std::string& config_path, const std::optional<std::string>& method,
                             const std::optional<std::uint64_t>& seed) {
  json j = config_path.empty() ? json::object() : read_json_file(config_path);
  if (!j.is_object()) throw ValidationError("config", "expected a JSON object");
  if (method) j["method"] = *method;
  if (seed) j["seed"] = *seed;
  OptimizerConfig config = config_from_json(j);
  validate(config);
  return config;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << content)) throw IoError("cannot write " + path.string());
}


/// Runs one optimization writing the run-store files into `dir`.
OptimizationResult optimize_into(const fs::path& dir, const OptimizerConfig& config, const TaskDataset& dataset,
                                 const std::optional<std::string>& p_init) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_file(dir / "config.json", to_json(config).dump(2) + "\n");
  write_file(dir / "dataset.jsonl", dataio::to_jsonl(dataset));
  write_file(dir / "trajectory.jsonl", "");
  write_file(dir / "log.txt", "");
  fs::remove(dir / "result.json", ec);

  std::ofstream trajectory(dir / "trajectory.jsonl", std::ios::binary | std::ios::app);
  std::ofstream log(dir / "log.txt", std::ios::binary | std::ios::app);
  RunHooks hooks;
  hooks.on_round = [&](const RoundReport& r) {
    trajectory << trajectory_line(r.round, r.best_score, r.best_prompt).dump() << "\n";
    trajectory.flush();
  };
  hooks.log = [&](std::string_view line) { log << line << "\n"; };
  OptimizationResult result = promptforge::optimize(config, dataset, p_init, hooks);
  write_file(dir / "result.json", to_json(result).dump(2) + "\n");
  return result;
}

std::uint64_t model_calls(const CallCounts& c) { return c.optimizer_calls + c.task_calls; }

std::vector<std::string> split_methods(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw ValidationError("methods", "no methods given");
  return out;
}

// ---------------------------------------------------------------- commands

struct OptimizeArgs {
  std::string method, data, config, out;
  std::optional<std::string> p_init;
  std::optional<std::uint64_t> seed;
  bool json = false;
};

int cmd_optimize(const OptimizeArgs& a, std::ostream& out) {
  const OptimizerConfig config = build_config(a.config, a.method, a.seed);
  const TaskDataset dataset = load_data(a.data);
  const OptimizationResult r = optimize_into(a.out, config, dataset, a.p_init);
  if (a.json) {
    out << json{{"method", to_string(config.method)},
                {"best_prompt", r.best.text},
                {"best_score", *r.best.score},
                {"final_score", r.final_score},
                {"rounds", r.trajectory.size()},
                {"model_calls", model_calls(r.calls)},
                {"out", a.out}}
               .dump(2)
        << "\n";
  } else {
    out << "best prompt: " << r.best.text << "\n";
    out << "score: " << number(r.final_score) << " (minibatch " << number(*r.best.score) << ", "
        << r.trajectory.size() << " rounds)\n";
    out << "wrote " << (fs::path(a.out) / "result.json").string() << "\n";
  }
  return kSuccess;
}

struct EvaluateArgs {
  std::string prompt, data, metric, config, task_model;
  std::optional<std::uint64_t> seed;
  bool json = false;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  json j = a.config.empty() ? json::object() : read_json_file(a.config);
  if (!j.is_object()) throw ValidationError("config", "expected a JSON object");
  if (!a.metric.empty()) j["metric"] = a.metric;
  if (!a.task_model.empty()) {
    const bool local = fs::is_directory(a.task_model);
    j["task_model"] = {{"kind", local ? "local" : "api"}, {"identifier", a.task_model}};
  }
  OptimizerConfig config = config_from_json(j);
  if (a.seed) config.task_model.generation.seed = *a.seed;
  if (config.task_model.identifier.empty()) {
    throw ValidationError("task_model", "give --task-model or a config with task_model");
  }
  if (!MetricRegistry::global().contains(config.metric)) {
    throw ValidationError("metric", "unknown metric '" + config.metric + "'");
  }
  const TaskDataset dataset = load_data(a.data);
  const eval::ExtractionSpec extraction = eval::resolve_extraction(config);
  auto client = models::make_client(config.task_model, {&dataset});
  eval::ScoreOptions options;
  options.workers = config.eval_workers;
  options.generation = config.task_model.generation;
  if (config.method == Method::greater) options.chain_max_tokens = config.max_chain_tokens;
  const eval::PromptScore s =
      eval::score_prompt(a.prompt, dataset, *client, extraction, config.metric, std::nullopt, options);

  if (a.json) {
    json records = json::array();
    for (const auto& r : s.records) records.push_back(to_json(r));
    out << json{{"score", s.score}, {"failures", s.failures}, {"records", records}}.dump(2) << "\n";
  } else {
    out << "score: " << number(s.score) << "\n";
    for (const auto& r : s.records) {
      const TaskExample* ex = dataset.find(r.example_id);
      out << r.example_id << "\t" << number(r.metric_value) << "\t" << cell(r.extracted_answer) << "\t"
          << cell(ex ? ex->answer : "") << (r.error ? "\terror: " + *r.error : "") << "\n";
    }
  }
  return kSuccess;
}

struct CompareArgs {
  std::string methods, data, config, out;
  std::optional<std::string> p_init;
  std::optional<std::uint64_t> seed;
  bool json = false;
};

int cmd_compare(const CompareArgs& a, std::ostream& out, std::ostream& err) {
  const std::vector<std::string> methods = split_methods(a.methods);
  std::vector<OptimizerConfig> configs;
  for (const auto& m : methods) {
    parse_method(m);
    configs.push_back(build_config(a.config, m, a.seed));
  }
  const TaskDataset dataset = load_data(a.data);

  struct Row {
    std::string method;
    std::optional<OptimizationResult> result;
    std::string error;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    Row row{methods[i], std::nullopt, ""};
    try {
      row.result = optimize_into(fs::path(a.out) / methods[i], configs[i], dataset, a.p_init);
    } catch (const std::exception& e) {
      row.error = e.what();
      err << methods[i] << " failed: " << e.what() << "\n";
    }
    rows.push_back(std::move(row));
  }

  std::string csv = "method,score,rounds,model_calls\n";
  json report = json::array();
  bool any_failed = false;
  for (const Row& row : rows) {
    if (row.result) {
      const auto& r = *row.result;
      csv += row.method + "," + number(r.final_score) + "," + std::to_string(r.trajectory.size()) + "," +
             std::to_string(model_calls(r.calls)) + "\n";
      report.push_back({{"method", row.method},
                        {"status", "succeeded"},
                        {"score", r.final_score},
                        {"rounds", r.trajectory.size()},
                        {"model_calls", model_calls(r.calls)},
                        {"best_prompt", r.best.text}});
    } else {
      any_failed = true;
      csv += row.method + ",failed,,\n";
      report.push_back({{"method", row.method}, {"status", "failed"}, {"error", row.error}});
    }
  }
  write_file(fs::path(a.out) / "comparison.csv", csv);

  if (a.json) {
    out << json{{"rows", report}, {"csv", (fs::path(a.out) / "comparison.csv").string()}}.dump(2) << "\n";
  } else {
    char line[160];
    std::snprintf(line, sizeof line, "%-10s %-10s %-8s %-12s\n", "method", "score", "rounds", "model_calls");
    out << line;
    for (const auto& r : report) {
      if (r["status"] == "succeeded") {
        std::snprintf(line, sizeof line, "%-10s %-10.4f %-8d %-12llu\n", r["method"].get<std::string>().c_str(),
                      r["score"].get<double>(), r["rounds"].get<int>(),
                      static_cast<unsigned long long>(r["model_calls"].get<std::uint64_t>()));
      } else {
        std::snprintf(line, sizeof line, "%-10s %-10s %-8s %-12s\n", r["method"].get<std::string>().c_str(),
                      "failed", "-", "-");
      }
      out << line;
    }
  }
  return any_failed ? kRuntimeFailure : kSuccess;
}

struct ServeArgs {
  std::optional<int> port;
  std::string store;
  int max_jobs = 1;
  std::optional<std::uint64_t> seed;
  bool json = false;
};

int cmd_serve(const ServeArgs& a, std::ostream& out) {
  service::ServerOptions options = service::options_from_env();
  if (a.port) options.port = *a.port;
  if (!a.store.empty()) options.store_root = a.store;
  options.max_concurrent_jobs = a.max_jobs;

  // Signals go to a dedicated thread; block them before any worker starts.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  sigset_t previous;
  pthread_sigmask(SIG_BLOCK, &signals, &previous);
  struct Restore {
    sigset_t mask;
    ~Restore() { pthread_sigmask(SIG_SETMASK, &mask, nullptr); }
  } restore{previous};

  service::Server server(options);
  const int port = server.bind();
  if (a.json) {
    out << json{{"listening", options.host + ":" + std::to_string(port)}, {"port", port},
                {"store", options.store_root.string()}}
               .dump()
        << std::endl;
  } else {
    out << "listening on http://" << options.host << ":" << port << " (store " << options.store_root.string()
        << ")" << std::endl;
  }

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen();
  // listen() can also return without a signal (e.g. a fatal socket error);
  // wake the waiter so it can be joined.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kSuccess;
}

int report_error(std::ostream& err, int code, const std::string& message) {
  err << "error: " << message << "\n";
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"promptforge: prompt optimization from the command line", "promptforge"};
  app.require_subcommand(1);

  OptimizeArgs opt;
  auto* optimize = app.add_subcommand("optimize", "run one optimizer and write result.json + trajectory.jsonl");
  optimize->add_option("--method", opt.method, "ape, apo, pe2, textgrad or greater")->required();
  optimize->add_option("--data", opt.data, "task dataset (jsonl)")->required();
  optimize->add_option("--p-init", opt.p_init, "initial prompt (default: first example's prompt)");
  optimize->add_option("--config", opt.config, "optimizer config (JSON)");
  optimize->add_option("--out", opt.out, "output directory")->required();
  optimize->add_option("--seed", opt.seed, "random seed (overrides the config)");
  optimize->add_flag("--json", opt.json, "machine-readable output");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "score one prompt on a dataset");
  evaluate->add_option("--prompt", ev.prompt, "prompt to score")->required();
  evaluate->add_option("--data", ev.data, "task dataset (jsonl)")->required();
  evaluate->add_option("--metric", ev.metric, "metric name (default exact_match)");
  evaluate->add_option("--config", ev.config, "config supplying task_model and extraction (JSON)");
  evaluate->add_option("--task-model", ev.task_model, "task model identifier or local weights directory");
  evaluate->add_option("--seed", ev.seed, "sampling seed");
  evaluate->add_flag("--json", ev.json, "machine-readable output");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "run several optimizers under identical seeds and budgets");
  compare->add_option("--methods", cmp.methods, "comma-separated methods")->required();
  compare->add_option("--data", cmp.data, "task dataset (jsonl)")->required();
  compare->add_option("--p-init", cmp.p_init, "initial prompt");
  compare->add_option("--config", cmp.config, "shared optimizer config (JSON)");
  compare->add_option("--out", cmp.out, "output directory")->required();
  compare->add_option("--seed", cmp.seed, "random seed shared by every method");
  compare->add_flag("--json", cmp.json, "machine-readable output");

  ServeArgs srv;
  auto* serve = app.add_subcommand("serve", "run the HTTP job service until interrupted");
  serve->add_option("--port", srv.port, "port (default $PROMPTFORGE_PORT or 8080; 0 picks a free one)");
  serve->add_option("--store", srv.store, "run store directory (default $PROMPTFORGE_STORE)");
  serve->add_option("--max-concurrent-jobs", srv.max_jobs, "jobs executed at once")->check(CLI::PositiveNumber);
  serve->add_option("--seed", srv.seed, "accepted for uniformity; jobs carry their own seeds");
  serve->add_flag("--json", srv.json, "machine-readable startup line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (const auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return kUsageError;
  }

  try {
    if (optimize->parsed()) return cmd_optimize(opt, out);
    if (evaluate->parsed()) return cmd_evaluate(ev, out);
    if (compare->parsed()) return cmd_compare(cmp, out, err);
    if (serve->parsed()) return cmd_serve(srv, out);
  } catch (const UsageError& e) {
    return report_error(err, kUsageError, e.what());
  } catch (const ValidationError& e) {
    return report_error(err, kUsageError, e.what());
  } catch (const RegistryError& e) {
    return report_error(err, kUsageError, e.what());
  } catch (const ConfigurationError& e) {
    return report_error(err, kUsageError, e.what());
  } catch (const std::exception& e) {
    return report_error(err, kRuntimeFailure, e.what());
  }
  return kUsageError;
}

}  // namespace promptforge::cli
