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

#include "lmpdrive/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "lmpdrive/lmp.hpp"
#include "lmpdrive/text.hpp"

namespace lmpdrive
{

std::string to_string(BackendKind kind)
{
  switch (kind) {
    case BackendKind::kMock:
      return "mock";
    case BackendKind::kReplay:
      return "replay";
    case BackendKind::kLive:
      return "live";
  }
  return "mock";
}

BackendKind backend_kind_from_string(const std::string & text)
{
  const std::string t = to_lower(trim(text));
  if (t == "mock") {
    return BackendKind::kMock;
  }
  if (t == "replay") {
    return BackendKind::kReplay;
  }
  if (t == "live") {
    return BackendKind::kLive;
  }
  throw std::invalid_argument("unknown backend '" + text + "' (expected mock, replay or live)");
}

void BackendConfig::validate() const
{
  if (!(timeout > 0.0)) {
    throw std::invalid_argument("backend timeout must be positive");
  }
  if (retry_count < 0) {
    throw std::invalid_argument("retry count must be >= 0");
  }
  if (!(mock_delay >= 0.0)) {
    throw std::invalid_argument("mock delay must be >= 0");
  }
  if (kind == BackendKind::kLive && (!endpoint || endpoint->empty())) {
    throw std::invalid_argument("live backend needs an endpoint");
  }
  if (kind == BackendKind::kReplay && replay_transcript.empty()) {
    throw std::invalid_argument("replay backend needs a transcript file");
  }
}

LatencySample make_latency_sample(SteadyTime t_command, SteadyTime t_response)
{
  if (t_response < t_command) {
    throw std::invalid_argument("response precedes command");
  }
  return {t_command, t_response, std::chrono::duration<double>(t_response - t_command).count()};
}

std::string to_string(GatewayErrorKind kind)
{
  switch (kind) {
    case GatewayErrorKind::kTimeout:
      return "timeout";
    case GatewayErrorKind::kTransport:
      return "transport";
    case GatewayErrorKind::kMalformedResponse:
      return "malformed_response";
  }
  return "transport";
}

namespace
{

// Lowercase words separated by single spaces, padded so " word" anchors a word start.
std::string normalize_words(const std::string & text)
{
  std::string out = " ";
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-') {
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (out.back() != ' ') {
      out.push_back(' ');
    }
  }
  if (out.back() != ' ') {
    out.push_back(' ');
  }
  return out;
}

struct LexiconEntry
{
  std::string_view pattern;
  int intensity;
};

// Checked in order; the first hit decides. Phrases come before single words
// so "too conservative" is not read as "conservative".
constexpr LexiconEntry kLexicon[] = {
  {" too conservative", +1}, {" too slow", +1},   {" too cautious", +1}, {" too aggressive", -1},
  {" too fast", -1},         {" too quick", -1},  {" speed up", +1},     {" slow down", -1},
  {" faster", +1},           {" hurry", +1},      {" late ", +1},        {" accelerat", +1},
  {" quick", +1},            {" conservative", -1}, {" slow", -1},       {" motion-sick", -1},
  {" motion sick", -1},      {" careful", -1},    {" gentl", -1},        {" aggressive", -1},
  {" cautious", -1},         {" calm", -1},
};

constexpr std::string_view kMaxPatterns[] = {" as fast as you can", " as fast as possible", " maximum speed",
                                              " top speed"};

constexpr double kMockStep = 10.0;          // km/h per unit of intensity
constexpr double kMemoryMargin = 5.0;       // km/h past the speed that drew feedback

double mock_lookahead(double velocity) { return std::clamp(6.0 + 0.15 * velocity, 4.0, 30.0); }

std::string follower_line(const FollowerConfig & f)
{
  Lmp p;
  p.follower = f;
  return serialize_lmp(p);
}

}  // namespace

std::optional<Intent> classify_command(const std::string & command)
{
  const std::string words = normalize_words(command);
  for (auto pattern : kMaxPatterns) {
    if (words.find(pattern) != std::string::npos) {
      return Intent{+1, true};
    }
  }
  for (const auto & entry : kLexicon) {
    if (words.find(entry.pattern) != std::string::npos) {
      return Intent{entry.intensity, false};
    }
  }
  return std::nullopt;
}

std::string mock_translate(const PromptBundle & bundle, const ContextSnapshot & view, const FollowerConfig & current)
{
  const auto intent = classify_command(bundle.command);
  if (!intent) {
    return follower_line(current);
  }
  const double limit = view.speed_limit;
  double v = intent->max_speed ? limit : std::clamp(current.target_velocity + kMockStep * intent->intensity, 0.0, limit);

  // The most recent evaluated command pointing the same way decides the correction.
  const auto history = parse_memory(bundle.memory);
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    if (!it->executed || !it->evaluation) {
      continue;
    }
    const auto past = classify_command(it->command);
    if (!past || (past->intensity > 0) != (intent->intensity > 0)) {
      continue;
    }
    const auto parsed = parse_lmp(it->action);
    const auto * prog = std::get_if<Lmp>(&parsed);
    if (prog == nullptr || !prog->follower) {
      continue;
    }
    const double before = prog->follower->target_velocity;
    const std::string feedback = normalize_words(*it->evaluation);
    if (feedback.find(" too fast") != std::string::npos) {
      v = std::min(v, before - kMemoryMargin);
    } else if (feedback.find(" too slow") != std::string::npos) {
      v = std::max(v, before + kMemoryMargin);
    }
    break;
  }
  v = std::clamp(v, 0.0, limit);

  Lmp out;
  out.engage = true;
  out.follower = FollowerConfig{v, mock_lookahead(v), std::clamp(current.lookahead_ratio, 1.0, 4.0), 1};
  return serialize_lmp(out);
}

std::string MockBackend::complete(
  const PromptBundle & bundle, const FollowerConfig & current, std::chrono::duration<double> timeout)
{
  if (++calls_ <= options_.transport_failures) {
    throw GatewayError(GatewayErrorKind::kTransport, "injected transport failure");
  }
  if (options_.delay > timeout.count()) {
    std::this_thread::sleep_for(timeout);
    throw GatewayError(GatewayErrorKind::kTimeout, "mock response exceeded the timeout");
  }
  if (options_.delay > 0.0) {
    std::this_thread::sleep_for(std::chrono::duration<double>(options_.delay));
  }
  if (options_.malformed) {
    return "Sure, I will adjust the speed for you.";
  }
  // Read the bundle the way a remote model would: from its serialized form.
  const auto sections = split_bundle(serialize_bundle(bundle));
  const auto view = sections ? parse_context(sections->context) : std::nullopt;
  if (!view) {
    throw GatewayError(GatewayErrorKind::kMalformedResponse, "context section did not parse");
  }
  PromptBundle seen = bundle;
  seen.command = sections->command;
  seen.memory = sections->memory;
  return mock_translate(seen, *view, current);
}

std::string bundle_hash(const PromptBundle & bundle) { return fnv1a_hex(serialize_bundle(bundle)); }

std::string transcript_line(const TranscriptEntry & e)
{
  nlohmann::json j{{"timestamp", e.timestamp}, {"backend", e.backend},   {"bundle_hash", e.bundle_hash},
                   {"request", e.request},     {"latency", e.latency},   {"attempts", e.attempts}};
  j["response"] = e.response ? nlohmann::json(*e.response) : nlohmann::json(nullptr);
  j["error"] = e.error ? nlohmann::json(*e.error) : nlohmann::json(nullptr);
  return j.dump();
}

TranscriptEntry parse_transcript_line(const std::string & line)
{
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("bundle_hash") || !j.at("bundle_hash").is_string()) {
    throw std::invalid_argument("malformed transcript line");
  }
  TranscriptEntry e;
  e.timestamp = j.value("timestamp", "");
  e.backend = j.value("backend", "");
  e.bundle_hash = j.at("bundle_hash").get<std::string>();
  e.request = j.value("request", "");
  if (j.contains("response") && j.at("response").is_string()) {
    e.response = j.at("response").get<std::string>();
  }
  if (j.contains("error") && j.at("error").is_string()) {
    e.error = j.at("error").get<std::string>();
  }
  e.latency = j.value("latency", 0.0);
  e.attempts = j.value("attempts", 0);
  return e;
}

ReplayBackend::ReplayBackend(const std::filesystem::path & transcript)
{
  std::ifstream in(transcript);
  if (!in) {
    throw std::invalid_argument("cannot open replay transcript " + transcript.string());
  }
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) {
      continue;
    }
    try {
      auto e = parse_transcript_line(line);
      if (e.response) {
        responses_[e.bundle_hash] = *e.response;
      }
    } catch (const std::invalid_argument &) {
      throw std::invalid_argument(transcript.string() + ":" + std::to_string(n) + ": malformed transcript line");
    }
  }
}

std::string ReplayBackend::complete(const PromptBundle & bundle, const FollowerConfig &, std::chrono::duration<double>)
{
  const auto it = responses_.find(bundle_hash(bundle));
  if (it == responses_.end()) {
    throw GatewayError(GatewayErrorKind::kTransport, "no recorded response for this prompt");
  }
  return it->second;
}

LiveBackend::LiveBackend(std::string endpoint, std::string model, std::string api_key)
: model_(std::move(model)), api_key_(std::move(api_key))
{
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint, m, kUrl)) {
    throw std::invalid_argument("endpoint must be an http(s) URL: " + endpoint);
  }
  origin_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (origin_.rfind("https", 0) == 0) {
    throw std::invalid_argument("this build has no TLS support; use an http endpoint");
  }
#endif
}

std::string LiveBackend::complete(
  const PromptBundle & bundle, const FollowerConfig &, std::chrono::duration<double> timeout)
{
  nlohmann::json body{{"temperature", 0}, {"messages", nlohmann::json::array()}};
  if (!model_.empty()) {
    body["model"] = model_;
  }
  for (const auto & msg : to_chat_messages(bundle)) {
    body["messages"].push_back({{"role", msg.role}, {"content", msg.content}});
  }
  httplib::Client client(origin_);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout).count();
  client.set_connection_timeout(usec / 1000000, usec % 1000000);
  client.set_read_timeout(usec / 1000000, usec % 1000000);
  client.set_write_timeout(usec / 1000000, usec % 1000000);
  httplib::Headers headers;
  if (!api_key_.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key_);
  }
  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || elapsed >= 0.95 * timeout.count()) {
      throw GatewayError(GatewayErrorKind::kTimeout, "model endpoint timed out");
    }
    throw GatewayError(GatewayErrorKind::kTransport, "model endpoint unreachable: " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) {
    throw GatewayError(GatewayErrorKind::kTransport, "model endpoint answered HTTP " + std::to_string(res->status));
  }
  const auto j = nlohmann::json::parse(res->body, nullptr, false);
  try {
    if (!j.is_discarded()) {
      const auto & content = j.at("choices").at(0).at("message").at("content");
      if (content.is_string()) {
        return content.get<std::string>();
      }
    }
  } catch (const nlohmann::json::exception &) {
  }
  throw GatewayError(GatewayErrorKind::kMalformedResponse, "response has no choices[0].message.content string");
}

std::unique_ptr<Backend> make_backend(const BackendConfig & cfg)
{
  cfg.validate();
  switch (cfg.kind) {
    case BackendKind::kMock:
      return std::make_unique<MockBackend>(MockOptions{cfg.mock_delay, 0, false});
    case BackendKind::kReplay:
      return std::make_unique<ReplayBackend>(cfg.replay_transcript);
    case BackendKind::kLive: {
      const char * key = std::getenv(cfg.api_key_env.c_str());
      return std::make_unique<LiveBackend>(*cfg.endpoint, cfg.model_name.value_or(""), key ? key : "");
    }
  }
  throw std::invalid_argument("unknown backend kind");
}

Gateway::Gateway(BackendConfig cfg, std::unique_ptr<Backend> backend) : cfg_(std::move(cfg)), backend_(std::move(backend))
{
  cfg_.validate();
  if (!backend_) {
    throw std::invalid_argument("gateway needs a backend");
  }
}

void Gateway::set_transcript(std::filesystem::path path)
{
  std::lock_guard<std::mutex> lock(mutex_);
  transcript_ = std::move(path);
}

std::vector<std::string> Gateway::transcript() const
{
  std::lock_guard<std::mutex> lock(mutex_);
  return lines_;
}

void Gateway::record(const TranscriptEntry & entry)
{
  std::lock_guard<std::mutex> lock(mutex_);
  lines_.push_back(transcript_line(entry));
  if (transcript_) {
    std::ofstream out(*transcript_, std::ios::app);
    out << lines_.back() << '\n';
  }
}

Translation Gateway::translate(const PromptBundle & bundle, const FollowerConfig & current)
{
  TranscriptEntry entry;
  entry.timestamp = utc_timestamp();
  entry.backend = backend_->name();
  entry.request = serialize_bundle(bundle);
  entry.bundle_hash = fnv1a_hex(entry.request);

  const auto budget = std::chrono::duration<double>(cfg_.timeout);
  const SteadyTime t_command = std::chrono::steady_clock::now();
  int attempts = 0;
  std::string text;
  while (true) {
    ++attempts;
    try {
      text = backend_->complete(bundle, current, budget);
      break;
    } catch (const GatewayError & e) {
      if (e.kind() == GatewayErrorKind::kTransport && attempts <= cfg_.retry_count) {
        continue;
      }
      entry.error = to_string(e.kind()) + ": " + e.what();
      entry.attempts = attempts;
      entry.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_command).count();
      record(entry);
      throw;
    }
  }
  const auto latency = make_latency_sample(t_command, std::chrono::steady_clock::now());
  entry.attempts = attempts;
  entry.latency = latency.seconds;
  if (latency.seconds > cfg_.timeout) {
    entry.error = "timeout: response arrived after the deadline";
    record(entry);
    throw GatewayError(GatewayErrorKind::kTimeout, "response arrived after the deadline");
  }
  entry.response = text;
  record(entry);
  return {text, latency, attempts};
}

}  // namespace lmpdrive
