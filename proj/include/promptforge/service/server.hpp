// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

#include "promptforge/service/jobs.hpp"

namespace promptforge::service {

struct ServerOptions {
  std::filesystem::path store_root = "promptforge-store";
  std::string host = "127.0.0.1";
  /// 0 binds an ephemeral port.
  int port = 8080;
  int max_concurrent_jobs = 1;
};

/// PROMPTFORGE_STORE and PROMPTFORGE_PORT override the defaults.
ServerOptions options_from_env(ServerOptions defaults = {});

/// Parameter descriptors for every method, as served by GET /optimizers.
nlohmann::json optimizer_schemas();

/// JSON-over-HTTP front of the job manager.
///
///   POST /datasets              jsonl body -> {"dataset_ref", "examples"}
///   GET  /optimizers            method descriptors with parameter schemas
///   POST /jobs                  {"config", "dataset_ref", "p_init"?} -> job
///   GET  /jobs, GET /jobs/{id}  job state, progress and trajectory
///   GET  /jobs/{id}/result      result.json once succeeded, 409 before
///   POST /jobs/{id}/cancel
///   GET  /healthz
///
/// Errors are {"error": {"code", "message", "field"?, "state"?}}.
class Server {
 public:
  /// Opens the store (IoError when unusable) and recovers interrupted jobs.
  explicit Server(ServerOptions options);
  ~Server();

  /// Binds the socket; throws IoError when the port is taken. Returns the port.
  int bind();
  /// Serves until stop(). bind() must have succeeded.
  void listen();
  void stop();

  JobManager& jobs() noexcept { return *jobs_; }
  const ServerOptions& options() const noexcept { return options_; }

 private:
  struct Impl;
  ServerOptions options_;
  std::unique_ptr<RunStore> store_;
  std::unique_ptr<JobManager> jobs_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace promptforge::service
