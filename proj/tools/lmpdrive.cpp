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

// lmpdrive command-line front end.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lmpdrive/fuzz.hpp"
#include "lmpdrive/memory_store.hpp"
#include "lmpdrive/metrics.hpp"
#include "lmpdrive/score_table.hpp"
#include "lmpdrive/scripted_driver.hpp"
#include "lmpdrive/serialization.hpp"
#include "lmpdrive/service.hpp"
#include "lmpdrive/session.hpp"
#include "lmpdrive/text.hpp"

namespace
{

using namespace lmpdrive;

std::string read_text(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Scenario resolve_scenario(const std::string & name, std::uint64_t seed)
{
  if (std::filesystem::exists(name)) {
    return load_scenario_file(name);
  }
  return make_scenario(scenario_kind_from_string(name), seed);
}

struct BackendFlags
{
  std::string kind{"mock"};
  std::string endpoint;
  std::string model;
  std::string transcript;
  double timeout{10.0};
  double mock_delay{0.0};

  void add_to(CLI::App & app)
  {
    app.add_option("--backend", kind, "Translation backend")->check(CLI::IsMember({"mock", "replay", "live"}));
    app.add_option("--endpoint", endpoint, "Chat-completions URL (live)");
    app.add_option("--model", model, "Model name (live)");
    app.add_option("--transcript", transcript, "Recorded transcript to answer from (replay)");
    app.add_option("--timeout", timeout, "Backend timeout, seconds")->check(CLI::PositiveNumber);
    app.add_option("--mock-delay", mock_delay, "Injected mock latency, seconds")->check(CLI::NonNegativeNumber);
  }

  BackendConfig build() const
  {
    BackendConfig cfg;
    cfg.kind = backend_kind_from_string(kind);
    if (!endpoint.empty()) {
      cfg.endpoint = endpoint;
    }
    if (!model.empty()) {
      cfg.model_name = model;
    }
    cfg.replay_transcript = transcript;
    cfg.timeout = timeout;
    cfg.mock_delay = mock_delay;
    cfg.validate();
    return cfg;
  }
};

void print_report(const MetricsReport & r)
{
  std::printf("  ttc_min          %s\n", r.ttc_min ? format_fixed1(*r.ttc_min).c_str() : "n/a");
  std::printf("  speed_variance   %.4f\n", r.speed_variance);
  std::printf("  mean_abs_accel   %.4f\n", r.mean_abs_accel);
  std::printf("  mean_abs_jerk    %.4f\n", r.mean_abs_jerk);
  std::printf("  sub_scores       ttc %.2f  var %.2f  accel %.2f  jerk %.2f\n", r.sub_scores.ttc,
              r.sub_scores.variance, r.sub_scores.accel, r.sub_scores.jerk);
  std::printf("  driving_score    %.2f\n", r.driving_score);
  if (r.latency) {
    std::printf("  latency          mean %.3f s  p95 %.3f s  (n=%zu)\n", r.latency->mean, r.latency->p95,
                r.latency->count);
  }
}

int cmd_run(
  const std::string & scenario_name, const std::string & driver, const BackendFlags & backend,
  const std::string & corpus_path, std::uint64_t seed, double duration, const std::string & out_dir,
  const std::string & data_dir, bool no_memory, const std::string & clock)
{
  SessionConfig cfg;
  cfg.session_id = "run";
  cfg.driver_id = driver;
  cfg.scenario = std::make_shared<const Scenario>(resolve_scenario(scenario_name, seed));
  cfg.seed = seed;
  cfg.backend = backend.build();
  cfg.memory_enabled = !no_memory;
  cfg.clock = clock == "realtime" ? ClockMode::kRealtime : ClockMode::kVirtual;
  cfg.output_dir = out_dir;
  if (std::filesystem::exists(out_dir / std::filesystem::path("events.jsonl")) ||
      std::filesystem::exists(out_dir / std::filesystem::path("transcript.jsonl"))) {
    std::filesystem::remove(out_dir / std::filesystem::path("events.jsonl"));
    std::filesystem::remove(out_dir / std::filesystem::path("transcript.jsonl"));
  }
  const auto corpus = corpus_path.empty() ? std::vector<CorpusEntry>{} : load_corpus_file(corpus_path);
  auto memory = std::make_shared<MemoryStore>(data_dir);
  Session session(cfg, memory);
  const auto outcomes = run_corpus(session, corpus, duration);
  session.wait_for_workers();
  const FollowerConfig final_cfg = session.follower();
  const auto summary = session.end_trip();

  int failures = 0;
  for (const auto & o : outcomes) {
    if (o.error) {
      std::fprintf(stderr, "t=%.2f '%s': %s\n", o.entry.time, o.entry.utterance.c_str(), o.error->c_str());
      ++failures;
    }
  }
  for (const auto & f : session.flows()) {
    std::printf("flow %llu [%s] %s -> %s\n", static_cast<unsigned long long>(f.flow_id), to_string(f.status).c_str(),
                f.command.c_str(), f.verdict ? to_string(f.verdict->outcome).c_str() : (f.error ? f.error->c_str() : "-"));
  }
  std::printf("final follower: velocity %s km/h, lookahead %s m, ratio %s\n",
              format_double(final_cfg.target_velocity).c_str(), format_double(final_cfg.lookahead_distance).c_str(),
              format_double(final_cfg.lookahead_ratio).c_str());
  std::printf("trip %llu: %zu samples, takeover %s\n", static_cast<unsigned long long>(summary.trip_id),
              summary.samples, summary.takeover ? "yes" : "no");
  if (summary.report) {
    print_report(*summary.report);
  }
  std::printf("artifacts in %s\n", out_dir.c_str());
  return failures == 0 ? 0 : 2;
}

int cmd_score(
  const std::vector<std::string> & logs, const std::string & metrics_table, const std::string & config_path,
  const std::string & behavior, bool as_json)
{
  const std::string config = config_path.empty() ? std::string("{}") : read_text(config_path);
  nlohmann::json out = nlohmann::json::array();
  if (!metrics_table.empty()) {
    const auto scored = score_table(parse_metric_table(read_text(metrics_table)), config);
    if (!as_json) {
      std::printf("%-18s %-10s %8s %8s %8s %8s %9s %9s\n", "behavior", "row", "ttc", "var", "accel", "jerk", "score",
                  "printed");
    }
    for (const auto & s : scored) {
      if (as_json) {
        auto j = to_json(s.report);
        j["behavior"] = s.row.behavior;
        j["row"] = s.row.row;
        j["printed_score"] = s.row.printed_score ? nlohmann::json(*s.row.printed_score) : nlohmann::json(nullptr);
        out.push_back(j);
      } else {
        std::printf("%-18s %-10s %8s %8.2f %8.2f %8.2f %9.2f %9s\n", s.row.behavior.c_str(), s.row.row.c_str(),
                    s.row.ttc ? format_fixed1(*s.row.ttc).c_str() : "n/a", s.row.speed_variance, s.row.mean_abs_accel,
                    s.row.mean_abs_jerk, s.report.driving_score,
                    s.row.printed_score ? format_fixed1(*s.row.printed_score).c_str() : "-");
      }
    }
  }
  const ScoreConfig cfg = parse_score_config(config, behavior);
  for (const auto & path : logs) {
    const auto report = compute_report(TrajectoryLog::from_records(read_trajectory_file(path)), cfg);
    if (as_json) {
      auto j = to_json(report);
      j["log"] = path;
      out.push_back(j);
    } else {
      std::printf("%s\n", path.c_str());
      print_report(report);
    }
  }
  if (as_json) {
    std::printf("%s\n", out.dump(2).c_str());
  }
  return 0;
}

int cmd_fuzz(std::size_t count, std::uint64_t seed, double speed_limit)
{
  const auto report = fuzz_gate(count, seed, limits_for_speed_limit(speed_limit));
  std::printf("cases %zu: accepted %zu, format_rejected %zu, parameter_rejected %zu, failures %zu\n", report.cases,
              report.accepted, report.format_rejected, report.parameter_rejected, report.failures.size());
  for (std::size_t i = 0; i < std::min<std::size_t>(report.failures.size(), 10); ++i) {
    const auto & f = report.failures[i];
    std::printf("case %zu: %s\n%s\n", f.case_index, f.problem.c_str(), f.text.c_str());
  }
  return report.failures.empty() ? 0 : 1;
}

Service * g_service = nullptr;

void on_signal(int)
{
  if (g_service != nullptr) {
    g_service->stop();
  }
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"lmpdrive: natural-language commands for a simulated vehicle"};
  app.require_subcommand(1);

  // run
  auto * run = app.add_subcommand("run", "Run one trip, optionally speaking a command corpus");
  std::string scenario = "highway";
  std::string driver = "default";
  std::string corpus;
  std::uint64_t seed = 0;
  double duration = 60.0;
  std::string out_dir = "lmpdrive-out";
  std::string data_dir = "lmpdrive-data";
  std::string clock = "virtual";
  bool no_memory = false;
  BackendFlags backend;
  run->add_option("--scenario", scenario, "highway, intersection, parking, or a scenario file");
  run->add_option("--driver", driver, "Driver id for memory");
  backend.add_to(*run);
  run->add_option("--corpus", corpus, "Corpus file (time_s,level,utterance)");
  run->add_option("--seed", seed, "Scenario seed");
  run->add_option("--duration", duration, "Trip length, sim seconds")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Artifact directory");
  run->add_option("--data-dir", data_dir, "Driver memory directory");
  run->add_option("--clock", clock, "virtual or realtime")->check(CLI::IsMember({"virtual", "realtime"}));
  run->add_flag("--no-memory", no_memory, "Leave driver history out of prompts");

  // score
  auto * score = app.add_subcommand("score", "Score trajectory logs or a metric table");
  std::vector<std::string> logs;
  std::string metrics_table;
  std::string score_config;
  std::string behavior;
  bool as_json = false;
  score->add_option("logs", logs, "Trajectory CSV logs");
  score->add_option("--metrics", metrics_table, "Metric table CSV to score row by row");
  score->add_option("--config", score_config, "Score config JSON (weights, gamma, baselines)");
  score->add_option("--behavior", behavior, "Baseline set to use for logs");
  score->add_flag("--json", as_json, "Print JSON");

  // memory
  auto * memory = app.add_subcommand("memory", "Manage driver memory profiles");
  memory->require_subcommand(1);
  std::string mem_dir = "lmpdrive-data";
  memory->add_option("--data-dir", mem_dir, "Driver memory directory");
  auto * mem_list = memory->add_subcommand("list", "List drivers, or one driver's records");
  std::string list_driver;
  mem_list->add_option("--driver", list_driver, "Show this driver's records");
  auto * mem_export = memory->add_subcommand("export", "Copy a driver's profile to a file");
  std::string export_driver;
  std::string export_out;
  mem_export->add_option("--driver", export_driver)->required();
  mem_export->add_option("--out", export_out)->required();
  auto * mem_import = memory->add_subcommand("import", "Install an exported profile");
  std::string import_in;
  mem_import->add_option("file", import_in)->required()->check(CLI::ExistingFile);

  // fuzz-lmp
  auto * fuzz = app.add_subcommand("fuzz-lmp", "Fuzz the program gate");
  std::size_t fuzz_count = 10000;
  std::uint64_t fuzz_seed = 1;
  double fuzz_limit = 60.0;
  fuzz->add_option("--count", fuzz_count, "Cases")->check(CLI::PositiveNumber);
  fuzz->add_option("--seed", fuzz_seed, "Generator seed");
  fuzz->add_option("--speed-limit", fuzz_limit, "Speed limit, km/h")->check(CLI::PositiveNumber);

  // serve
  auto * serve = app.add_subcommand("serve", "Serve the HTTP API");
  ServiceConfig svc;
  std::string sessions_dir;
  std::string static_dir;
  std::string token;
  std::string serve_clock = "realtime";
  BackendFlags serve_backend;
  std::string serve_data = "lmpdrive-data";
  serve->add_option("--host", svc.host, "Bind address");
  serve->add_option("--port", svc.port, "Port (0 picks one)");
  serve->add_option("--data-dir", serve_data, "Driver memory directory");
  serve->add_option("--sessions-dir", sessions_dir, "Per-session artifact root");
  serve->add_option("--static-dir", static_dir, "Console assets to serve at /");
  serve->add_option("--clock", serve_clock, "virtual or realtime")->check(CLI::IsMember({"virtual", "realtime"}));
  serve->add_option("--token", token, "Require this bearer token");
  serve_backend.add_to(*serve);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(scenario, driver, backend, corpus, seed, duration, out_dir, data_dir, no_memory, clock);
    }
    if (score->parsed()) {
      if (logs.empty() && metrics_table.empty()) {
        std::fprintf(stderr, "score: give trajectory logs or --metrics\n");
        return 2;
      }
      return cmd_score(logs, metrics_table, score_config, behavior, as_json);
    }
    if (memory->parsed()) {
      MemoryStore store(mem_dir);
      if (mem_list->parsed()) {
        if (list_driver.empty()) {
          for (const auto & d : store.drivers()) {
            std::printf("%s\n", d.c_str());
          }
          return 0;
        }
        if (!store.has_driver(list_driver)) {
          std::fprintf(stderr, "unknown driver %s\n", list_driver.c_str());
          return 1;
        }
        for (const auto & r : store.load_history(list_driver, std::numeric_limits<std::size_t>::max())) {
          std::printf("%s\n", to_json(r).dump().c_str());
        }
        return 0;
      }
      if (mem_export->parsed()) {
        store.export_profile(export_driver, export_out);
        return 0;
      }
      if (mem_import->parsed()) {
        std::printf("imported %s\n", store.import_profile(import_in).c_str());
        return 0;
      }
    }
    if (fuzz->parsed()) {
      return cmd_fuzz(fuzz_count, fuzz_seed, fuzz_limit);
    }
    if (serve->parsed()) {
      svc.data_dir = serve_data;
      svc.backend = serve_backend.build();
      svc.clock = serve_clock == "virtual" ? ClockMode::kVirtual : ClockMode::kRealtime;
      if (!sessions_dir.empty()) {
        svc.sessions_dir = sessions_dir;
      }
      if (!static_dir.empty()) {
        svc.static_dir = static_dir;
      }
      if (!token.empty()) {
        svc.token = token;
      }
      Service service(svc);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::printf("listening on %s:%d\n", svc.host.c_str(), svc.port);
      std::fflush(stdout);
      const bool ok = service.listen();
      g_service = nullptr;
      return ok ? 0 : 1;
    }
  } catch (const std::exception & e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
