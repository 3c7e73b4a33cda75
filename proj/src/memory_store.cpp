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

#include "lmpdrive/memory_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lmpdrive/text.hpp"

namespace lmpdrive
{

namespace fs = std::filesystem;

namespace
{

constexpr const char * kFormatName = "lmpdrive-memory";
constexpr int kFormatVersion = 1;

std::string encode_driver(const std::string & id)
{
  std::string out;
  for (unsigned char c : id) {
    if (std::isalnum(c) || c == '_' || c == '-' || c == '.') {
      out.push_back(static_cast<char>(c));
    } else {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

std::string read_file(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class FileDescriptor
{
public:
  explicit FileDescriptor(int fd) : fd_(fd) {}
  ~FileDescriptor()
  {
    if (fd_ >= 0) {
      ::close(fd_);
    }
  }
  FileDescriptor(const FileDescriptor &) = delete;
  FileDescriptor & operator=(const FileDescriptor &) = delete;
  int get() const { return fd_; }

private:
  int fd_;
};

void write_all_synced(const fs::path & path, const std::string & bytes, int flags)
{
  FileDescriptor fd(::open(path.c_str(), flags, 0644));
  if (fd.get() < 0) {
    throw StorageFailure("open " + path.string() + ": " + std::strerror(errno));
  }
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::write(fd.get(), bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) {
        continue;
      }
      throw StorageFailure("write " + path.string() + ": " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd.get()) != 0) {
    throw StorageFailure("fsync " + path.string() + ": " + std::strerror(errno));
  }
}

std::string header_line(const std::string & driver_id)
{
  return nlohmann::json{{"format", kFormatName}, {"version", kFormatVersion}, {"driver_id", driver_id}}.dump();
}

}  // namespace

DriverProfile parse_profile(const std::string & body)
{
  DriverProfile profile;
  const auto lines = split_lines(body);
  const bool torn_tail = !body.empty() && body.back() != '\n';
  bool header_seen = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (torn_tail && i + 1 == lines.size()) {
      break;
    }
    if (trim(lines[i]).empty()) {
      continue;
    }
    const auto j = nlohmann::json::parse(lines[i], nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw StorageFailure("corrupt memory line " + std::to_string(i + 1));
    }
    if (!header_seen) {
      if (j.value("format", "") != kFormatName || j.value("version", 0) != kFormatVersion) {
        throw StorageFailure("memory file lacks a supported version header");
      }
      profile.driver_id = j.value("driver_id", "");
      header_seen = true;
      continue;
    }
    const std::string type = j.value("type", "");
    if (type == "interaction") {
      MemoryRecord r;
      r.record_id = j.at("record_id").get<std::uint64_t>();
      r.trip_id = j.value("trip_id", std::uint64_t{0});
      r.timestamp = j.value("timestamp", "");
      r.command = j.at("command").get<std::string>();
      r.lmp = j.value("lmp", "");
      r.verdict = j.value("verdict", "accepted");
      if (!profile.records.empty() && r.record_id <= profile.records.back().record_id) {
        throw StorageFailure("memory record ids are not increasing");
      }
      profile.records.push_back(std::move(r));
    } else if (type == "feedback") {
      const auto id = j.at("record_id").get<std::uint64_t>();
      for (auto & r : profile.records) {
        if (r.record_id == id && !r.feedback) {
          r.feedback = j.at("feedback").get<std::string>();
        }
      }
    } else {
      throw StorageFailure("unknown memory event type '" + type + "'");
    }
  }
  if (!header_seen && !trim(body).empty() && !torn_tail) {
    throw StorageFailure("memory file lacks a version header");
  }
  return profile;
}

MemoryStore::MemoryStore(fs::path data_dir) : data_dir_(std::move(data_dir))
{
  std::error_code ec;
  fs::create_directories(data_dir_, ec);
  if (ec) {
    throw StorageFailure("cannot create memory directory " + data_dir_.string() + ": " + ec.message());
  }
}

fs::path MemoryStore::profile_path(const std::string & driver_id) const
{
  return data_dir_ / (encode_driver(driver_id) + ".memory.jsonl");
}

DriverProfile & MemoryStore::profile(const std::string & driver_id)
{
  if (driver_id.empty()) {
    throw std::invalid_argument("driver_id must be nonempty");
  }
  auto it = cache_.find(driver_id);
  if (it != cache_.end()) {
    return it->second;
  }
  DriverProfile p;
  p.driver_id = driver_id;
  const fs::path path = profile_path(driver_id);
  if (fs::exists(path)) {
    std::string body = read_file(path);
    const auto last_nl = body.find_last_of('\n');
    if (!body.empty() && body.back() != '\n') {
      // Torn append from a crash: drop the partial line so later appends stay aligned.
      const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
      fs::resize_file(path, keep);
      body.resize(keep);
    }
    p = parse_profile(body);
    p.driver_id = driver_id;
  }
  return cache_.emplace(driver_id, std::move(p)).first->second;
}

void MemoryStore::append_line(const std::string & driver_id, const std::string & line)
{
  const fs::path path = profile_path(driver_id);
  std::string bytes;
  if (!fs::exists(path) || fs::file_size(path) == 0) {
    bytes = header_line(driver_id) + "\n";
  }
  bytes += line + "\n";
  write_all_synced(path, bytes, O_WRONLY | O_CREAT | O_APPEND);
}

std::uint64_t MemoryStore::append_interaction(
  const std::string & driver_id, std::uint64_t trip_id, const std::string & command, const std::string & lmp,
  const std::string & verdict)
{
  std::lock_guard<std::mutex> lock(mutex_);
  DriverProfile & p = profile(driver_id);
  MemoryRecord r;
  r.record_id = p.records.empty() ? 1 : p.records.back().record_id + 1;
  r.trip_id = trip_id;
  r.timestamp = utc_timestamp();
  r.command = command;
  r.lmp = lmp;
  r.verdict = verdict;
  const nlohmann::json line = {
    {"type", "interaction"}, {"record_id", r.record_id}, {"trip_id", r.trip_id}, {"timestamp", r.timestamp},
    {"command", r.command},  {"lmp", r.lmp},             {"verdict", r.verdict}};
  append_line(driver_id, line.dump());
  p.records.push_back(std::move(r));
  return p.records.back().record_id;
}

std::uint64_t MemoryStore::attach_feedback(const std::string & driver_id, const std::string & feedback)
{
  std::lock_guard<std::mutex> lock(mutex_);
  DriverProfile & p = profile(driver_id);
  for (auto it = p.records.rbegin(); it != p.records.rend(); ++it) {
    if (!it->feedback) {
      const nlohmann::json line = {
        {"type", "feedback"}, {"record_id", it->record_id}, {"timestamp", utc_timestamp()}, {"feedback", feedback}};
      append_line(driver_id, line.dump());
      it->feedback = feedback;
      return it->record_id;
    }
  }
  throw NoPendingInteraction();
}

std::vector<MemoryRecord> MemoryStore::load_history(const std::string & driver_id, std::size_t limit)
{
  std::lock_guard<std::mutex> lock(mutex_);
  if (driver_id.empty()) {
    return {};
  }
  if (!cache_.count(driver_id) && !fs::exists(profile_path(driver_id))) {
    return {};
  }
  const auto & records = profile(driver_id).records;
  const std::size_t n = std::min(limit, records.size());
  return {records.end() - static_cast<std::ptrdiff_t>(n), records.end()};
}

bool MemoryStore::has_driver(const std::string & driver_id)
{
  std::lock_guard<std::mutex> lock(mutex_);
  return !driver_id.empty() && (cache_.count(driver_id) || fs::exists(profile_path(driver_id)));
}

std::vector<std::string> MemoryStore::drivers()
{
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<std::string> out;
  const std::string suffix = ".memory.jsonl";
  for (const auto & entry : fs::directory_iterator(data_dir_)) {
    const std::string name = entry.path().filename().string();
    if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
      continue;
    }
    try {
      const DriverProfile p = parse_profile(read_file(entry.path()));
      if (!p.driver_id.empty()) {
        out.push_back(p.driver_id);
      }
    } catch (const StorageFailure &) {
      continue;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void MemoryStore::export_profile(const std::string & driver_id, const fs::path & out) const
{
  const fs::path src = profile_path(driver_id);
  if (!fs::exists(src)) {
    throw StorageFailure("unknown driver '" + driver_id + "'");
  }
  std::error_code ec;
  fs::copy_file(src, out, fs::copy_options::overwrite_existing, ec);
  if (ec) {
    throw StorageFailure("export failed: " + ec.message());
  }
}

std::string MemoryStore::import_profile(const fs::path & in)
{
  if (!fs::exists(in)) {
    throw StorageFailure("import file not found: " + in.string());
  }
  const std::string body = read_file(in);
  if (body.empty() || body.back() != '\n') {
    throw StorageFailure("import file is truncated");
  }
  const DriverProfile parsed = parse_profile(body);
  if (parsed.driver_id.empty()) {
    throw StorageFailure("import file names no driver");
  }
  std::lock_guard<std::mutex> lock(mutex_);
  const fs::path dst = profile_path(parsed.driver_id);
  const fs::path tmp = dst.string() + ".tmp";
  write_all_synced(tmp, body, O_WRONLY | O_CREAT | O_TRUNC);
  std::error_code ec;
  fs::rename(tmp, dst, ec);
  if (ec) {
    throw StorageFailure("import failed: " + ec.message());
  }
  cache_.erase(parsed.driver_id);
  return parsed.driver_id;
}

}  // namespace lmpdrive
