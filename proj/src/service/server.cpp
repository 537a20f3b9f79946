// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptforge/service/server.hpp"

#include <cstdlib>

#include "promptforge/core/error.hpp"
#include "promptforge/core/json_io.hpp"
#include "promptforge/core/registry.hpp"

// httplib drags in <resolv.h>, whose `_res` macro collides with Eigen
// identifiers, so it has to come after every header that includes Eigen.
#include <httplib.h>

namespace promptforge::service {

using nlohmann::json;

ServerOptions options_from_env(ServerOptions defaults) {
  if (const char* store = std::getenv("PROMPTFORGE_STORE"); store && *store) defaults.store_root = store;
  if (const char* port = std::getenv("PROMPTFORGE_PORT"); port && *port) {
    try {
      defaults.port = std::stoi(port);
    } catch (const std::exception&) {
      throw ValidationError("PROMPTFORGE_PORT", std::string("not a port number: ") + port);
    }
  }
  return defaults;
}

namespace {

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void reply_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                 const json& extra = json::object()) {
  json err{{"code", code}, {"message", message}};
  err.update(extra);
  reply(res, status, json{{"error", err}});
}

template <typename Handler>
void guarded(httplib::Response& res, Handler&& handle) {
  try {
    handle();
  } catch (const ValidationError& e) {
    reply_error(res, 422, "validation_error", e.what(), {{"field", e.field()}});
  } catch (const RegistryError& e) {
    reply_error(res, 422, "validation_error", e.what());
  } catch (const NotFoundError& e) {
    reply_error(res, 404, "not_found", e.what());
  } catch (const ConflictError& e) {
    const std::string state = e.what();
    reply_error(res, 409, "conflict", "job is " + state, {{"state", state}});
  } catch (const json::parse_error& e) {
    reply_error(res, 400, "bad_request", std::string("request body is not valid JSON: ") + e.what());
  } catch (const json::exception& e) {
    reply_error(res, 422, "validation_error", e.what());
  } catch (const std::exception& e) {
    reply_error(res, 500, "internal_error", e.what());
  }
}

json job_view(JobManager& jobs, const Job& job) {
  json j = to_json(job);
  j["trajectory"] = jobs.store().read_trajectory(job.id);
  return j;
}

}  // namespace

struct Server::Impl {
  httplib::Server http;
  int port = -1;
};

Server::Server(ServerOptions options)
    : options_(std::move(options)),
      store_(std::make_unique<RunStore>(options_.store_root)),
      jobs_(std::make_unique<JobManager>(*store_, options_.max_concurrent_jobs)),
      impl_(std::make_unique<Impl>()) {
  auto& http = impl_->http;
  JobManager& jobs = *jobs_;

  // SO_REUSEADDR only: httplib's default also sets SO_REUSEPORT, which would
  // let a second server share a busy port instead of failing to bind.
  http.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  http.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  http.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  http.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"status", "ok"}}); });

  http.Get("/optimizers", [](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, optimizer_schemas()); });
  });

  http.Post("/datasets", [&jobs](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string ref = jobs.store().put_dataset(req.body);
      const TaskDataset ds = jobs.store().load_dataset(ref);
      reply(res, 201, {{"dataset_ref", ref}, {"examples", ds.size()}});
    });
  });

  http.Post("/jobs", [&jobs](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      if (!body.is_object()) throw ValidationError("", "request body must be a JSON object");
      for (const auto& [key, value] : body.items()) {
        if (key != "config" && key != "dataset_ref" && key != "p_init") throw ValidationError(key, "unknown field");
      }
      if (!body.contains("config")) throw ValidationError("config", "required");
      if (!body.contains("dataset_ref") || !body.at("dataset_ref").is_string()) {
        throw ValidationError("dataset_ref", "required string");
      }
      std::optional<std::string> p_init;
      if (body.contains("p_init") && !body.at("p_init").is_null()) {
        if (!body.at("p_init").is_string()) throw ValidationError("p_init", "must be a string");
        p_init = body.at("p_init").get<std::string>();
      }
      const OptimizerConfig config = config_from_json(body.at("config"));
      const Job job = jobs.submit(config, body.at("dataset_ref").get<std::string>(), p_init);
      reply(res, 201, job_view(jobs, jobs.get(job.id)));
    });
  });

  http.Get("/jobs", [&jobs](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      json list = json::array();
      for (const Job& job : jobs.list()) list.push_back(to_json(job));
      reply(res, 200, {{"jobs", list}});
    });
  });

  http.Get(R"(/jobs/([A-Za-z0-9_-]+))", [&jobs](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, job_view(jobs, jobs.get(req.matches[1]))); });
  });

  http.Get(R"(/jobs/([A-Za-z0-9_-]+)/result)", [&jobs](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      res.status = 200;
      res.set_content(jobs.result(req.matches[1]), kJson);
    });
  });

  http.Post(R"(/jobs/([A-Za-z0-9_-]+)/cancel)", [&jobs](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, job_view(jobs, jobs.cancel(req.matches[1]))); });
  });

  http.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) {
      reply_error(res, 404, "not_found", "no route for " + req.method + " " + req.path);
    } else {
      reply_error(res, res.status, "http_error", "request failed with status " + std::to_string(res.status));
    }
  });
}

Server::~Server() {
  stop();
  jobs_.reset();
}

int Server::bind() {
  auto& http = impl_->http;
  if (options_.port == 0) {
    impl_->port = http.bind_to_any_port(options_.host);
  } else if (http.bind_to_port(options_.host, options_.port)) {
    impl_->port = options_.port;
  }
  if (impl_->port <= 0) {
    throw IoError("cannot bind " + options_.host + ":" + std::to_string(options_.port) + " (port in use?)");
  }
  return impl_->port;
}

void Server::listen() {
  if (impl_->port <= 0) throw IoError("listen() before bind()");
  impl_->http.listen_after_bind();
}

void Server::stop() {
  if (impl_) impl_->http.stop();
}

}  // namespace promptforge::service
