// Copyright 2026 The lmpdrive Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lmpdrive/service.hpp"

#include <limits>
#include <random>

#include "httplib.h"
#include "json.hpp"
#include "lmpdrive/serialization.hpp"
#include "lmpdrive/text.hpp"

namespace lmpdrive
{

using nlohmann::json;

SessionHost::SessionHost(std::unique_ptr<Session> session) : session_(std::move(session))
{
  frame_ = session_->telemetry();
  runner_ = std::thread([this]() { run(); });
}

SessionHost::~SessionHost() { stop(); }

void SessionHost::stop()
{
  stop_.store(true);
  frame_cv_.notify_all();
  if (runner_.joinable()) {
    runner_.join();
  }
}

void SessionHost::run()
{
  const double dt = session_->config().dt;
  const auto tick = std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(dt));
  auto next = std::chrono::steady_clock::now();
  while (!stop_.load()) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      session_->step();
      frame_ = session_->telemetry();
    }
    frame_cv_.notify_all();
    next += tick;
    const auto now = std::chrono::steady_clock::now();
    if (next < now) {
      next = now;  // fell behind; do not try to catch up in a burst
    }
    std::this_thread::sleep_until(next);
  }
}

std::optional<TelemetryFrame> SessionHost::wait_frame(std::uint64_t after_seq, std::chrono::milliseconds timeout)
{
  std::unique_lock<std::mutex> lock(mutex_);
  const bool ready = frame_cv_.wait_for(lock, timeout, [&]() { return stop_.load() || frame_.seq > after_seq; });
  if (!ready || stop_.load()) {
    return std::nullopt;
  }
  return frame_;
}

TelemetryFrame SessionHost::latest_frame()
{
  std::lock_guard<std::mutex> lock(mutex_);
  return frame_;
}

std::optional<StoredResponse> SessionHost::replay(const std::string & key)
{
  std::lock_guard<std::mutex> lock(mutex_);
  const auto it = idempotent_.find(key);
  if (it == idempotent_.end()) {
    return std::nullopt;
  }
  return it->second;
}

void SessionHost::remember(const std::string & key, const StoredResponse & response)
{
  std::lock_guard<std::mutex> lock(mutex_);
  idempotent_[key] = response;
}

namespace
{

void send_json(httplib::Response & res, int status, const json & body)
{
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response & res, int status, const std::string & code, const std::string & message)
{
  send_json(res, status, {{"error", code}, {"message", message}});
}

void send_validation(httplib::Response & res, const json & fields)
{
  send_json(res, 422, {{"error", "validation"}, {"fields", fields}});
}

std::optional<json> parse_body(const httplib::Request & req, httplib::Response & res)
{
  if (req.body.empty()) {
    return json::object();
  }
  auto j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    send_validation(res, {{"body", "must be a JSON object"}});
    return std::nullopt;
  }
  return j;
}

std::string idempotency_key(const httplib::Request & req)
{
  return req.has_header("Idempotency-Key") ? req.get_header_value("Idempotency-Key") : std::string();
}

}  // namespace

Service::Service(ServiceConfig cfg)
: cfg_(std::move(cfg)),
  memory_(std::make_shared<MemoryStore>(cfg_.data_dir)),
  server_(std::make_unique<httplib::Server>())
{
  cfg_.backend.validate();
  if (!(cfg_.stream_hz > 0.0)) {
    throw std::invalid_argument("stream rate must be positive");
  }
  install_routes();
}

Service::~Service() { stop(); }

std::string Service::next_session_id()
{
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%llu-%06llx", static_cast<unsigned long long>(++session_counter_),
                static_cast<unsigned long long>(rng() & 0xffffffULL));
  return buf;
}

std::shared_ptr<SessionHost> Service::find(const std::string & session_id)
{
  std::lock_guard<std::mutex> lock(sessions_mutex_);
  const auto it = sessions_.find(session_id);
  return it == sessions_.end() ? nullptr : it->second;
}

int Service::start()
{
  int port = cfg_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(cfg_.host);
  } else if (!server_->bind_to_port(cfg_.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw std::runtime_error("cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
  }
  server_thread_ = std::thread([this]() { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

bool Service::listen() { return server_->listen(cfg_.host, cfg_.port); }

void Service::stop()
{
  {
    std::lock_guard<std::mutex> lock(sessions_mutex_);
    for (auto & [id, host] : sessions_) {
      host->stop();
    }
  }
  if (server_) {
    server_->stop();
  }
  if (server_thread_.joinable()) {
    server_thread_.join();
  }
}

void Service::install_routes()
{
  auto & srv = *server_;

  srv.set_pre_routing_handler([this](const httplib::Request & req, httplib::Response & res) {
    if (!cfg_.token || req.path.rfind("/api/", 0) != 0) {
      return httplib::Server::HandlerResponse::Unhandled;
    }
    if (req.get_header_value("Authorization") != "Bearer " + *cfg_.token) {
      send_error(res, 401, "unauthorized", "missing or wrong bearer token");
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  srv.set_exception_handler([](const httplib::Request &, httplib::Response & res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception & e) {
      send_error(res, 500, "internal", e.what());
    } catch (...) {
      send_error(res, 500, "internal", "unknown error");
    }
  });

  if (cfg_.static_dir) {
    srv.set_mount_point("/", cfg_.static_dir->string());
  }

  srv.Post("/api/sessions", [this](const httplib::Request & req, httplib::Response & res) {
    const std::string key = idempotency_key(req);
    if (!key.empty()) {
      std::lock_guard<std::mutex> lock(sessions_mutex_);
      if (const auto it = create_idempotent_.find(key); it != create_idempotent_.end()) {
        res.status = it->second.status;
        res.set_content(it->second.body, "application/json");
        return;
      }
    }
    const auto body = parse_body(req, res);
    if (!body) {
      return;
    }
    json errors = json::object();
    SessionConfig sc;
    sc.clock = cfg_.clock;
    sc.backend = cfg_.backend;
    if (!body->contains("driver_id") || !body->at("driver_id").is_string() ||
        trim(body->at("driver_id").get<std::string>()).empty()) {
      errors["driver_id"] = "required nonempty string";
    } else {
      sc.driver_id = body->at("driver_id").get<std::string>();
    }
    ScenarioKind kind = ScenarioKind::kHighway;
    if (body->contains("scenario")) {
      try {
        kind = scenario_kind_from_string(body->at("scenario").get<std::string>());
      } catch (const std::exception &) {
        errors["scenario"] = "one of highway, intersection, parking";
      }
    }
    if (body->contains("seed")) {
      if (!body->at("seed").is_number_unsigned()) {
        errors["seed"] = "must be a non-negative integer";
      } else {
        sc.seed = body->at("seed").get<std::uint64_t>();
      }
    }
    if (body->contains("backend")) {
      try {
        sc.backend.kind = backend_kind_from_string(body->at("backend").get<std::string>());
        sc.backend.validate();
      } catch (const std::exception & e) {
        errors["backend"] = e.what();
      }
    }
    if (body->contains("memory_enabled")) {
      if (!body->at("memory_enabled").is_boolean()) {
        errors["memory_enabled"] = "must be a boolean";
      } else {
        sc.memory_enabled = body->at("memory_enabled").get<bool>();
      }
    }
    if (!errors.empty()) {
      send_validation(res, errors);
      return;
    }
    sc.scenario = std::make_shared<const Scenario>(make_scenario(kind, sc.seed));
    std::shared_ptr<SessionHost> host;
    {
      std::lock_guard<std::mutex> lock(sessions_mutex_);
      sc.session_id = next_session_id();
    }
    if (cfg_.sessions_dir) {
      sc.output_dir = *cfg_.sessions_dir / sc.session_id;
    }
    const std::string id = sc.session_id;
    const std::string driver = sc.driver_id;
    host = std::make_shared<SessionHost>(std::make_unique<Session>(sc, memory_));
    const json out{{"session_id", id}, {"driver_id", driver}, {"scenario", to_string(kind)}, {"trip_id", 1}};
    std::lock_guard<std::mutex> lock(sessions_mutex_);
    sessions_[id] = host;
    if (!key.empty()) {
      create_idempotent_[key] = {201, out.dump()};
    }
    send_json(res, 201, out);
  });

  // Looks up the session and applies the Idempotency-Key for mutating calls.
  auto with_host = [this](const httplib::Request & req, httplib::Response & res, bool mutating, auto && fn) {
    const auto host = find(req.matches[1]);
    if (!host) {
      send_error(res, 404, "not_found", "unknown session " + std::string(req.matches[1]));
      return;
    }
    const std::string key = mutating ? idempotency_key(req) : std::string();
    if (!key.empty()) {
      if (const auto stored = host->replay(key)) {
        res.status = stored->status;
        res.set_content(stored->body, "application/json");
        return;
      }
    }
    fn(*host);
    if (!key.empty() && res.status < 500) {
      host->remember(key, {res.status, res.body});
    }
  };

  srv.Get(R"(/api/sessions/([^/]+))", [with_host](const httplib::Request & req, httplib::Response & res) {
    with_host(req, res, false, [&](SessionHost & host) { send_json(res, 200, to_json(host.latest_frame())); });
  });

  srv.Delete(R"(/api/sessions/([^/]+))", [this](const httplib::Request & req, httplib::Response & res) {
    std::shared_ptr<SessionHost> host;
    {
      std::lock_guard<std::mutex> lock(sessions_mutex_);
      const auto it = sessions_.find(req.matches[1]);
      if (it != sessions_.end()) {
        host = it->second;
        sessions_.erase(it);
      }
    }
    if (!host) {
      send_error(res, 404, "not_found", "unknown session");
      return;
    }
    host->stop();
    res.status = 204;
  });

  srv.Post(R"(/api/sessions/([^/]+)/utterance)", [with_host](const httplib::Request & req, httplib::Response & res) {
    with_host(req, res, true, [&](SessionHost & host) {
      const auto body = parse_body(req, res);
      if (!body) {
        return;
      }
      if (!body->contains("text") || !body->at("text").is_string() ||
          trim(body->at("text").get<std::string>()).empty()) {
        send_validation(res, {{"text", "required nonempty string"}});
        return;
      }
      const std::string text = body->at("text").get<std::string>();
      host.with_session([&](Session & s) {
        try {
          const auto r = s.handle_utterance(text);
          json out{{"kind", to_string(r.event.kind)}, {"payload", r.event.payload}, {"received_at", r.event.received_at}};
          out["flow_id"] = r.flow_id ? json(*r.flow_id) : json(nullptr);
          out["record_id"] = r.record_id ? json(*r.record_id) : json(nullptr);
          send_json(res, 202, out);
        } catch (const SessionDegraded & e) {
          send_error(res, 409, "degraded", e.what());
        } catch (const NoPendingInteraction & e) {
          send_error(res, 409, "no_pending_interaction", e.what());
        } catch (const StorageFailure & e) {
          send_error(res, 503, "storage", e.what());
        } catch (const std::invalid_argument & e) {
          send_validation(res, {{"text", e.what()}});
        }
      });
    });
  });

  srv.Post(R"(/api/sessions/([^/]+)/takeover)", [with_host](const httplib::Request & req, httplib::Response & res) {
    with_host(req, res, true, [&](SessionHost & host) {
      host.with_session([&](Session & s) {
        s.record_takeover();
        send_json(res, 200,
                  {{"engaged", s.world().engaged}, {"n_takeover", s.n_takeover()}, {"trip_id", s.trip_id()}});
      });
    });
  });

  srv.Post(R"(/api/sessions/([^/]+)/trip/end)", [with_host](const httplib::Request & req, httplib::Response & res) {
    with_host(req, res, true, [&](SessionHost & host) {
      host.with_session([&](Session & s) { send_json(res, 200, to_json(s.end_trip())); });
    });
  });

  srv.Get(R"(/api/sessions/([^/]+)/flows)", [with_host](const httplib::Request & req, httplib::Response & res) {
    with_host(req, res, false, [&](SessionHost & host) {
      host.with_session([&](Session & s) {
        json flows = json::array();
        for (const auto & f : s.flows()) {
          flows.push_back(to_json(f));
        }
        send_json(res, 200, {{"flows", flows}});
      });
    });
  });

  srv.Get(R"(/api/sessions/([^/]+)/metrics)", [with_host](const httplib::Request & req, httplib::Response & res) {
    with_host(req, res, false, [&](SessionHost & host) {
      host.with_session([&](Session & s) {
        json trips = json::array();
        for (const auto & t : s.trips()) {
          trips.push_back(to_json(t));
        }
        json current = nullptr;
        if (s.trip_log().size() >= 3) {
          auto report = compute_report(TrajectoryLog::from_records(s.trip_log()), s.config().score);
          report.takeover = {s.n_takeover(), s.n_operation(), std::nullopt};
          if (s.n_operation() > 0) {
            report.takeover.rate = takeover_rate(s.n_takeover(), s.n_operation());
          }
          current = to_json(report);
        }
        const auto lat = s.latency_samples();
        json latency = nullptr;
        if (!lat.empty()) {
          const auto st = latency_stats(lat);
          latency = {{"mean", st.mean}, {"p95", st.p95}, {"count", st.count}};
        }
        send_json(res, 200,
                  {{"trip_id", s.trip_id()},
                   {"current_trip", current},
                   {"trips", trips},
                   {"latency", latency},
                   {"n_takeover", s.n_takeover()},
                   {"n_operation", s.n_operation()}});
      });
    });
  });

  srv.Get(R"(/api/sessions/([^/]+)/transcript)", [with_host](const httplib::Request & req, httplib::Response & res) {
    with_host(req, res, false, [&](SessionHost & host) {
      const auto lines = host.with_session([](Session & s) { return s.transcript(); });
      json entries = json::array();
      for (const auto & l : lines) {
        entries.push_back(json::parse(l));
      }
      send_json(res, 200, {{"entries", entries}});
    });
  });

  srv.Get(R"(/api/sessions/([^/]+)/stream)", [this](const httplib::Request & req, httplib::Response & res) {
    const auto host = find(req.matches[1]);
    if (!host) {
      send_error(res, 404, "not_found", "unknown session");
      return;
    }
    const auto period = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::duration<double>(1.0 / cfg_.stream_hz));
    auto last_seq = std::make_shared<std::uint64_t>(0);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [host, period, last_seq](std::size_t, httplib::DataSink & sink) {
      const auto started = std::chrono::steady_clock::now();
      const auto frame = host->wait_frame(*last_seq, std::chrono::milliseconds(1000));
      if (!frame) {
        // Keep-alive comment so idle proxies keep the stream open.
        const std::string ping = ": keep-alive\n\n";
        return sink.write(ping.data(), ping.size());
      }
      *last_seq = frame->seq;
      const std::string msg = "id: " + std::to_string(frame->seq) + "\nevent: telemetry\ndata: " + to_json(*frame).dump() + "\n\n";
      if (!sink.write(msg.data(), msg.size())) {
        return false;
      }
      std::this_thread::sleep_until(started + period);
      return true;
    });
  });

  srv.Get(R"(/api/drivers/([^/]+)/memory)", [this](const httplib::Request & req, httplib::Response & res) {
    const std::string driver = req.matches[1];
    if (!memory_->has_driver(driver)) {
      send_error(res, 404, "not_found", "unknown driver " + driver);
      return;
    }
    json records = json::array();
    for (const auto & r : memory_->load_history(driver, std::numeric_limits<std::size_t>::max())) {
      records.push_back(to_json(r));
    }
    send_json(res, 200, {{"driver_id", driver}, {"records", records}});
  });
}

}  // namespace lmpdrive
