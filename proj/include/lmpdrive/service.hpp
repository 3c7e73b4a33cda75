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

#ifndef LMPDRIVE__SERVICE_HPP_
#define LMPDRIVE__SERVICE_HPP_

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "lmpdrive/gateway.hpp"
#include "lmpdrive/memory_store.hpp"
#include "lmpdrive/session.hpp"

namespace httplib
{
class Server;
}

namespace lmpdrive
{

struct ServiceConfig
{
  std::string host{"127.0.0.1"};
  int port{8080};  ///< 0 picks a free port
  std::filesystem::path data_dir{"lmpdrive-data"};
  std::optional<std::filesystem::path> sessions_dir;  ///< per-session artifacts
  std::optional<std::filesystem::path> static_dir;    ///< console assets served at /
  BackendConfig backend;
  ClockMode clock{ClockMode::kRealtime};
  double stream_hz{20.0};
  std::optional<std::string> token;  ///< when set, requests need `Authorization: Bearer <token>`
};

/// Stored answer for an Idempotency-Key.
struct StoredResponse
{
  int status{200};
  std::string body;
};

/// A session plus the thread that advances it in wall-clock time.
class SessionHost
{
public:
  explicit SessionHost(std::unique_ptr<Session> session);
  ~SessionHost();
  SessionHost(const SessionHost &) = delete;
  SessionHost & operator=(const SessionHost &) = delete;

  /// Runs `fn` with the session locked; all mutations go through here.
  template <typename Fn>
  auto with_session(Fn && fn)
  {
    std::lock_guard<std::mutex> lock(mutex_);
    return fn(*session_);
  }

  /// Blocks until a frame newer than `after_seq` exists, or `timeout` passes.
  std::optional<TelemetryFrame> wait_frame(std::uint64_t after_seq, std::chrono::milliseconds timeout);
  TelemetryFrame latest_frame();

  void stop();

  std::optional<StoredResponse> replay(const std::string & key);
  void remember(const std::string & key, const StoredResponse & response);

private:
  void run();

  std::unique_ptr<Session> session_;
  std::mutex mutex_;
  std::condition_variable frame_cv_;
  TelemetryFrame frame_;
  std::atomic<bool> stop_{false};
  std::map<std::string, StoredResponse> idempotent_;
  std::thread runner_;
};

/// HTTP/JSON surface (see docs/api.md).
class Service
{
public:
  explicit Service(ServiceConfig cfg);
  ~Service();
  Service(const Service &) = delete;
  Service & operator=(const Service &) = delete;

  /// Binds, then serves on a background thread. Returns the bound port.
  int start();
  /// Binds and serves on the calling thread until stop().
  bool listen();
  void stop();

  std::shared_ptr<SessionHost> find(const std::string & session_id);
  MemoryStore & memory() { return *memory_; }

private:
  void install_routes();
  std::string next_session_id();

  ServiceConfig cfg_;
  std::shared_ptr<MemoryStore> memory_;
  std::unique_ptr<httplib::Server> server_;
  std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<SessionHost>> sessions_;
  std::map<std::string, StoredResponse> create_idempotent_;
  std::uint64_t session_counter_{0};
  std::thread server_thread_;
};

}  // namespace lmpdrive

#endif  // LMPDRIVE__SERVICE_HPP_
