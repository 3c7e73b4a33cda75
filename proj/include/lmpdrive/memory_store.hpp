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

#ifndef LMPDRIVE__MEMORY_STORE_HPP_
#define LMPDRIVE__MEMORY_STORE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmpdrive
{

/// One (command, program, feedback) interaction.
struct MemoryRecord
{
  std::uint64_t record_id{0};
  std::uint64_t trip_id{0};
  std::string timestamp;  ///< UTC, ISO 8601
  std::string command;
  std::string lmp;        ///< program text as generated (canonical form when it parsed)
  std::string verdict{"accepted"};
  std::optional<std::string> feedback;

  friend bool operator==(const MemoryRecord &, const MemoryRecord &) = default;
};

struct DriverProfile
{
  std::string driver_id;
  std::vector<MemoryRecord> records;
};

class StorageFailure : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class NoPendingInteraction : public std::runtime_error
{
public:
  NoPendingInteraction() : std::runtime_error("no interaction is waiting for feedback") {}
};

/// Append-only per-driver history, one line-delimited JSON file per driver:
/// a version header line, then `interaction` and `feedback` event lines.
class MemoryStore
{
public:
  explicit MemoryStore(std::filesystem::path data_dir);

  const std::filesystem::path & data_dir() const { return data_dir_; }

  /// Durable (fsync'd) before returning. Throws StorageFailure.
  std::uint64_t append_interaction(
    const std::string & driver_id, std::uint64_t trip_id, const std::string & command, const std::string & lmp,
    const std::string & verdict = "accepted");

  /// Attaches to the most recent feedback-less record. Throws NoPendingInteraction.
  std::uint64_t attach_feedback(const std::string & driver_id, const std::string & feedback);

  /// Newest `limit` records in chronological order; unknown driver -> empty.
  std::vector<MemoryRecord> load_history(const std::string & driver_id, std::size_t limit);

  bool has_driver(const std::string & driver_id);
  std::vector<std::string> drivers();

  std::filesystem::path profile_path(const std::string & driver_id) const;
  /// Byte copy of the driver's file. Throws StorageFailure for unknown drivers.
  void export_profile(const std::string & driver_id, const std::filesystem::path & out) const;
  /// Validates and installs an exported file, replacing any existing profile.
  /// Returns the driver id named in its header.
  std::string import_profile(const std::filesystem::path & in);

private:
  DriverProfile & profile(const std::string & driver_id);
  void append_line(const std::string & driver_id, const std::string & line);

  std::filesystem::path data_dir_;
  std::mutex mutex_;
  std::map<std::string, DriverProfile> cache_;
};

/// Parses a profile file body; tolerates a torn trailing line.
DriverProfile parse_profile(const std::string & body);

}  // namespace lmpdrive

#endif  // LMPDRIVE__MEMORY_STORE_HPP_
