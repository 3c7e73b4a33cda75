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

#include <chrono>
#include <memory>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "lmpdrive/context.hpp"
#include "lmpdrive/gateway.hpp"
#include "support.hpp"

using namespace lmpdrive;
using namespace std::chrono_literals;

namespace
{

ContextSnapshot view(double ego_kmh, double limit = 60.0)
{
  ContextSnapshot s;
  s.ego_speed = ego_kmh;
  s.speed_limit = limit;
  s.weather = "sunny";
  s.road_type = "highway";
  s.traffic_level = "light";
  return s;
}

PromptBundle bundle_for(const std::string & command, const ContextSnapshot & ctx, const std::string & memory = "")
{
  static const SystemMessage sys = build_system_message(make_highway_scenario(0), default_exemplars());
  return assemble(command, sys, render_context(ctx), memory);
}

FollowerConfig program_follower(const std::string & text)
{
  const auto g = gate(text, limits_for_speed_limit(120.0));
  REQUIRE(g.verdict.accepted());
  REQUIRE(g.lmp->follower);
  return *g.lmp->follower;
}

const FollowerConfig kCruise40{40.0, 12.0, 2.0, 1};

MemoryRecord past(const std::string & command, double velocity, const std::string & feedback)
{
  Lmp p;
  p.engage = true;
  p.follower = FollowerConfig{velocity, 10.0, 2.0, 1};
  MemoryRecord r;
  r.command = command;
  r.lmp = serialize_lmp(p);
  r.feedback = feedback;
  return r;
}

/// Minimal chat-completions endpoint on a free port.
class FakeEndpoint
{
public:
  explicit FakeEndpoint(httplib::Server::Handler handler)
  {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint()
  {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

private:
  httplib::Server server_;
  int port_{0};
  std::thread thread_;
};

}  // namespace

TEST_CASE("command lexicon")
{
  CHECK(classify_command("Drive as fast as you can.")->max_speed);
  CHECK(classify_command("You are driving too conservatively.")->intensity == +1);
  CHECK(classify_command("I feel a bit motion-sick right now.")->intensity == -1);
  CHECK(classify_command("I am really in a hurry now.")->intensity == +1);
  CHECK(classify_command("could you drive more conservatively")->intensity == -1);
  CHECK(classify_command("can you drive faster")->intensity == +1);
  CHECK(classify_command("that was too fast")->intensity == -1);
  CHECK_FALSE(classify_command("what a nice day").has_value());
  // Stems only match at a word start.
  CHECK_FALSE(classify_command("aslow").has_value());
}

TEST_CASE("mock translation table")
{
  struct Row
  {
    const char * command;
    double ego;
    double limit;
    double expected_velocity;
  };
  const Row rows[] = {
    {"could you drive more conservatively", 40.0, 60.0, 30.0},
    {"can you drive faster", 40.0, 60.0, 50.0},
    {"Drive as fast as you can.", 40.0, 60.0, 60.0},
    {"I am really in a hurry now.", 40.0, 45.0, 45.0},
    {"slow down", 40.0, 60.0, 30.0},
  };
  for (const auto & r : rows) {
    CAPTURE(r.command);
    const auto text = mock_translate(bundle_for(r.command, view(r.ego, r.limit)), view(r.ego, r.limit), kCruise40);
    const auto f = program_follower(text);
    CHECK(f.target_velocity == r.expected_velocity);
    CHECK(f.lookahead_distance == doctest::Approx(6.0 + 0.15 * r.expected_velocity));
    CHECK(f.lookahead_ratio == 2.0);
    CHECK(f.param_flag == 1);
    CHECK(text.find("/vehicle/engage") != std::string::npos);
  }
}

TEST_CASE("mock from a stopped car never goes negative and unknown commands are a no-op")
{
  FollowerConfig stopped{0.0, 6.0, 2.0, 1};
  const auto f = program_follower(mock_translate(bundle_for("slow down", view(0.0)), view(0.0), stopped));
  CHECK(f.target_velocity == 0.0);

  const auto same = mock_translate(bundle_for("sing me a song", view(40.0)), view(40.0), kCruise40);
  const auto g = gate(same, limits_for_speed_limit(60.0));
  REQUIRE(g.lmp);
  CHECK_FALSE(g.lmp->engage.has_value());
  CHECK(*g.lmp->follower == kCruise40);
}

TEST_CASE("mock reads the most recent same-direction feedback from memory")
{
  const auto ctx = view(40.0);
  // Earlier slow-down drew "too fast" at 30: next slow-down goes below 25.
  std::string memory = render_memory({past("drive more conservatively", 30.0, "that was too fast for me")});
  auto f = program_follower(mock_translate(bundle_for("drive more conservatively", ctx, memory), ctx, kCruise40));
  CHECK(f.target_velocity == 25.0);

  // Speed-up that drew "too slow" at 50: next speed-up goes to 55.
  memory = render_memory({past("I am in a hurry", 50.0, "too slow for me")});
  f = program_follower(mock_translate(bundle_for("I am really in a hurry now.", ctx, memory), ctx, kCruise40));
  CHECK(f.target_velocity == 55.0);

  // Opposite-direction feedback is ignored.
  memory = render_memory({past("slow down", 30.0, "too fast")});
  f = program_follower(mock_translate(bundle_for("can you drive faster", ctx, memory), ctx, kCruise40));
  CHECK(f.target_velocity == 50.0);

  // Limit still wins.
  memory = render_memory({past("faster", 58.0, "too slow")});
  f = program_follower(mock_translate(bundle_for("faster", ctx, memory), ctx, kCruise40));
  CHECK(f.target_velocity == 60.0);
}

TEST_CASE("latency samples are receive minus send")
{
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = make_latency_sample(t0, t0 + 250ms);
  CHECK(s.seconds == doctest::Approx(0.25));
  CHECK_THROWS_AS(make_latency_sample(t0 + 1ms, t0), std::invalid_argument);
}

TEST_CASE("gateway measures injected mock delay")
{
  BackendConfig cfg;
  cfg.timeout = 2.0;
  Gateway gw(cfg, std::make_unique<MockBackend>(MockOptions{0.2, 0, false}));
  const auto t = gw.translate(bundle_for("faster", view(40.0)), kCruise40);
  CHECK(t.latency.seconds >= 0.2);
  CHECK(t.latency.seconds < 0.25);
  CHECK(t.attempts == 1);
}

TEST_CASE("transport failures are retried, timeouts are not")
{
  BackendConfig cfg;
  cfg.timeout = 0.5;
  cfg.retry_count = 1;
  {
    auto backend = std::make_unique<MockBackend>(MockOptions{0.0, 1, false});
    auto * raw = backend.get();
    Gateway gw(cfg, std::move(backend));
    const auto t = gw.translate(bundle_for("faster", view(40.0)), kCruise40);
    CHECK(t.attempts == 2);
    CHECK(raw->calls() == 2);
  }
  {
    Gateway gw(cfg, std::make_unique<MockBackend>(MockOptions{0.0, 2, false}));
    try {
      gw.translate(bundle_for("faster", view(40.0)), kCruise40);
      FAIL("expected transport error");
    } catch (const GatewayError & e) {
      CHECK(e.kind() == GatewayErrorKind::kTransport);
    }
    const auto entry = parse_transcript_line(gw.transcript().back());
    CHECK(entry.attempts == 2);
    CHECK(entry.error.has_value());
  }
  {
    auto backend = std::make_unique<MockBackend>(MockOptions{1.0, 0, false});
    auto * raw = backend.get();
    Gateway gw(cfg, std::move(backend));
    const auto start = std::chrono::steady_clock::now();
    try {
      gw.translate(bundle_for("faster", view(40.0)), kCruise40);
      FAIL("expected timeout");
    } catch (const GatewayError & e) {
      CHECK(e.kind() == GatewayErrorKind::kTimeout);
    }
    CHECK(raw->calls() == 1);
    CHECK(std::chrono::steady_clock::now() - start < 900ms);
  }
}

TEST_CASE("malformed mock answers surface as-is for the gate to reject")
{
  BackendConfig cfg;
  Gateway gw(cfg, std::make_unique<MockBackend>(MockOptions{0.0, 0, true}));
  const auto t = gw.translate(bundle_for("faster", view(40.0)), kCruise40);
  CHECK(gate(t.text, limits_for_speed_limit(60.0)).verdict.outcome == Outcome::kFormatRejected);
}

TEST_CASE("replay answers from a recorded transcript")
{
  testing::TempDir dir;
  const auto path = dir / "transcript.jsonl";
  const auto b1 = bundle_for("faster", view(40.0));
  const auto b2 = bundle_for("slow down", view(40.0));
  std::string recorded;
  {
    BackendConfig cfg;
    Gateway gw(cfg, std::make_unique<MockBackend>());
    gw.set_transcript(path);
    recorded = gw.translate(b1, kCruise40).text;
  }
  BackendConfig cfg;
  cfg.kind = BackendKind::kReplay;
  cfg.replay_transcript = path;
  Gateway replay(cfg);
  CHECK(replay.translate(b1, kCruise40).text == recorded);
  CHECK(bundle_hash(b1) != bundle_hash(b2));
  try {
    replay.translate(b2, kCruise40);
    FAIL("expected a replay miss");
  } catch (const GatewayError & e) {
    CHECK(e.kind() == GatewayErrorKind::kTransport);
  }
}

TEST_CASE("transcript lines round-trip")
{
  TranscriptEntry e;
  e.timestamp = "2026-01-01T00:00:00Z";
  e.backend = "mock";
  e.bundle_hash = "0123456789abcdef";
  e.request = "### COMMAND\nx\n";
  e.response = "line1\nline2";
  e.latency = 1.5;
  e.attempts = 1;
  const auto back = parse_transcript_line(transcript_line(e));
  CHECK(back.request == e.request);
  CHECK(*back.response == *e.response);
  CHECK_FALSE(back.error.has_value());
  CHECK(back.latency == 1.5);
  CHECK_THROWS_AS(parse_transcript_line("{"), std::invalid_argument);
}

TEST_CASE("backend config validation")
{
  BackendConfig cfg;
  cfg.kind = BackendKind::kLive;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  CHECK_NOTHROW(cfg.validate());
  cfg.timeout = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK(backend_kind_from_string("replay") == BackendKind::kReplay);
  CHECK_THROWS_AS(backend_kind_from_string("gpt"), std::invalid_argument);
  CHECK_THROWS_AS(LiveBackend("ftp://x", "", ""), std::invalid_argument);
}

TEST_CASE("live backend speaks chat-completions")
{
  nlohmann::json seen;
  std::string auth;
  FakeEndpoint ok([&](const httplib::Request & req, httplib::Response & res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"PROGRAM"}}]})", "application/json");
  });
  LiveBackend live(ok.url(), "some-model", "secret");
  const auto b = bundle_for("faster", view(40.0));
  CHECK(live.complete(b, kCruise40, 2s) == "PROGRAM");
  CHECK(auth == "Bearer secret");
  CHECK(seen["model"] == "some-model");
  CHECK(seen["temperature"] == 0);
  REQUIRE(seen["messages"].size() == 2);
  CHECK(seen["messages"][0]["role"] == "system");
  CHECK(seen["messages"][1]["content"].get<std::string>().find("### COMMAND") != std::string::npos);
}

TEST_CASE("live backend maps failures")
{
  const auto b = bundle_for("faster", view(40.0));
  auto kind_of = [&](LiveBackend & live, std::chrono::duration<double> timeout) {
    try {
      live.complete(b, kCruise40, timeout);
    } catch (const GatewayError & e) {
      return e.kind();
    }
    FAIL("expected a gateway error");
    return GatewayErrorKind::kTransport;
  };
  {
    FakeEndpoint server([](const httplib::Request &, httplib::Response & res) {
      res.status = 500;
      res.set_content("oops", "text/plain");
    });
    LiveBackend live(server.url(), "", "");
    CHECK(kind_of(live, 2s) == GatewayErrorKind::kTransport);
  }
  {
    FakeEndpoint server([](const httplib::Request &, httplib::Response & res) {
      res.set_content(R"({"choices":[]})", "application/json");
    });
    LiveBackend live(server.url(), "", "");
    CHECK(kind_of(live, 2s) == GatewayErrorKind::kMalformedResponse);
  }
  {
    FakeEndpoint server([](const httplib::Request &, httplib::Response & res) {
      std::this_thread::sleep_for(800ms);
      res.set_content("{}", "application/json");
    });
    LiveBackend live(server.url(), "", "");
    CHECK(kind_of(live, 300ms) == GatewayErrorKind::kTimeout);
  }
  {
    LiveBackend live("http://127.0.0.1:1/v1/chat/completions", "", "");
    CHECK(kind_of(live, 1s) == GatewayErrorKind::kTransport);
  }
}
