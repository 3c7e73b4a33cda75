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

#ifndef LMPDRIVE__GATEWAY_HPP_
#define LMPDRIVE__GATEWAY_HPP_

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lmpdrive/context.hpp"
#include "lmpdrive/prompt.hpp"
#include "lmpdrive/sim.hpp"

namespace lmpdrive
{

enum class BackendKind { kMock, kReplay, kLive };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string & text);

struct BackendConfig
{
  BackendKind kind{BackendKind::kMock};
  std::optional<std::string> endpoint;    ///< live: full chat-completions URL
  std::optional<std::string> model_name;  ///< live: sent as `model`
  double timeout{10.0};                   // s
  int retry_count{1};                     ///< extra attempts after a Transport failure
  std::string api_key_env{"LMPDRIVE_API_KEY"};
  std::filesystem::path replay_transcript;  ///< replay: JSONL transcript to answer from
  double mock_delay{0.0};                 // s, mock only

  /// Throws std::invalid_argument: live needs an endpoint, timeout must be > 0.
  void validate() const;
};

using SteadyTime = std::chrono::steady_clock::time_point;

struct LatencySample
{
  SteadyTime t_command;   ///< request sent
  SteadyTime t_response;  ///< response received
  double seconds{0.0};    ///< t_response - t_command
};

LatencySample make_latency_sample(SteadyTime t_command, SteadyTime t_response);

enum class GatewayErrorKind { kTimeout, kTransport, kMalformedResponse };

std::string to_string(GatewayErrorKind kind);

class GatewayError : public std::runtime_error
{
public:
  GatewayError(GatewayErrorKind kind, const std::string & what) : std::runtime_error(what), kind_(kind) {}
  GatewayErrorKind kind() const { return kind_; }

private:
  GatewayErrorKind kind_;
};

/// One model call. Implementations throw GatewayError.
class Backend
{
public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  virtual std::string complete(
    const PromptBundle & bundle, const FollowerConfig & current, std::chrono::duration<double> timeout) = 0;
};

/// Signed intensity of a command under the mock lexicon: +1 faster, -1 slower,
/// nullopt when nothing matches. `max_speed` is set for "as fast as you can".
struct Intent
{
  int intensity{0};
  bool max_speed{false};
};

std::optional<Intent> classify_command(const std::string & command);

/// Deterministic stand-in for the model. Reads I and H from the bundle and the
/// speed limit from `view`; always emits a program that passes the gate.
std::string mock_translate(const PromptBundle & bundle, const ContextSnapshot & view, const FollowerConfig & current);

struct MockOptions
{
  double delay{0.0};              // s, slept before answering
  int transport_failures{0};      ///< the first N calls fail with Transport
  bool malformed{false};          ///< answer with text that is not a program
};

class MockBackend : public Backend
{
public:
  explicit MockBackend(MockOptions options = {}) : options_(options) {}
  std::string name() const override { return "mock"; }
  std::string complete(
    const PromptBundle & bundle, const FollowerConfig & current, std::chrono::duration<double> timeout) override;

  int calls() const { return calls_.load(); }

private:
  MockOptions options_;
  std::atomic<int> calls_{0};
};

/// Answers from a transcript keyed by the hash of the serialized bundle.
class ReplayBackend : public Backend
{
public:
  explicit ReplayBackend(const std::filesystem::path & transcript);
  std::string name() const override { return "replay"; }
  std::string complete(
    const PromptBundle & bundle, const FollowerConfig & current, std::chrono::duration<double> timeout) override;
  std::size_t size() const { return responses_.size(); }

private:
  std::map<std::string, std::string> responses_;
};

/// Chat-completions JSON over HTTP(S): messages array, temperature 0.
class LiveBackend : public Backend
{
public:
  LiveBackend(std::string endpoint, std::string model, std::string api_key);
  std::string name() const override { return "live"; }
  std::string complete(
    const PromptBundle & bundle, const FollowerConfig & current, std::chrono::duration<double> timeout) override;

private:
  std::string origin_;
  std::string path_;
  std::string model_;
  std::string api_key_;
};

std::unique_ptr<Backend> make_backend(const BackendConfig & cfg);

/// Hash used as the replay key.
std::string bundle_hash(const PromptBundle & bundle);

struct TranscriptEntry
{
  std::string timestamp;  ///< UTC, ISO 8601
  std::string backend;
  std::string bundle_hash;
  std::string request;    ///< serialized bundle
  std::optional<std::string> response;
  std::optional<std::string> error;
  double latency{0.0};
  int attempts{0};
};

std::string transcript_line(const TranscriptEntry & entry);
/// Throws std::invalid_argument on a malformed line.
TranscriptEntry parse_transcript_line(const std::string & line);

struct Translation
{
  std::string text;
  LatencySample latency;
  int attempts{1};
};

/// translate(): backend call with timing, retry policy and optional transcript.
class Gateway
{
public:
  Gateway(BackendConfig cfg, std::unique_ptr<Backend> backend);
  explicit Gateway(BackendConfig cfg) : Gateway(cfg, make_backend(cfg)) {}

  /// Also appends every call to `path` as one JSON line.
  void set_transcript(std::filesystem::path path);
  /// Every call so far, as transcript lines.
  std::vector<std::string> transcript() const;

  /// Throws GatewayError. Transport failures are retried cfg.retry_count times;
  /// timeouts never are. A response slower than cfg.timeout counts as Timeout.
  Translation translate(const PromptBundle & bundle, const FollowerConfig & current);

  const BackendConfig & config() const { return cfg_; }
  Backend & backend() { return *backend_; }

private:
  void record(const TranscriptEntry & entry);

  BackendConfig cfg_;
  std::unique_ptr<Backend> backend_;
  std::optional<std::filesystem::path> transcript_;
  std::vector<std::string> lines_;
  mutable std::mutex mutex_;
};

}  // namespace lmpdrive

#endif  // LMPDRIVE__GATEWAY_HPP_
