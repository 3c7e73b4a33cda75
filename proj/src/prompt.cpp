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

#include "lmpdrive/prompt.hpp"

#include <array>
#include <stdexcept>
#include <variant>

#include "lmpdrive/text.hpp"

namespace lmpdrive
{

std::vector<CotExemplar> parse_exemplars(std::string_view text)
{
  std::vector<CotExemplar> out;
  CotExemplar cur;
  enum class Field { kNone, kQuery, kThought, kAction } field = Field::kNone;
  auto flush = [&]() {
    if (cur.query.empty() && cur.thought.empty() && cur.action.empty()) {
      return;
    }
    if (cur.query.empty() || cur.thought.empty() || cur.action.empty()) {
      throw std::invalid_argument("exemplar '" + cur.query + "' needs query, thought and action");
    }
    out.push_back(cur);
    cur = {};
  };
  for (const auto & raw : split_lines(text)) {
    const std::string line = trim(raw);
    if (line == "---") {
      flush();
      field = Field::kNone;
    } else if (line.rfind("Query:", 0) == 0) {
      cur.query = trim(line.substr(6));
      field = Field::kQuery;
    } else if (line.rfind("Thought:", 0) == 0) {
      cur.thought = trim(line.substr(8));
      field = Field::kThought;
    } else if (line.rfind("Action:", 0) == 0) {
      cur.action = trim(line.substr(7));
      field = Field::kAction;
    } else if (!line.empty()) {
      switch (field) {
        case Field::kQuery:
          cur.query += " " + line;
          break;
        case Field::kThought:
          cur.thought += " " + line;
          break;
        case Field::kAction:
          cur.action += (cur.action.empty() ? "" : "\n") + line;
          break;
        case Field::kNone:
          throw std::invalid_argument("stray exemplar line: " + line);
      }
    }
  }
  flush();
  return out;
}

std::vector<CotExemplar> default_exemplars() { return parse_exemplars(prompt_assets::exemplars()); }

namespace
{

std::string replace_all(std::string text, std::string_view from, const std::string & to)
{
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

std::string one_line(std::string_view text)
{
  std::string out = trim(text);
  for (auto & c : out) {
    if (c == '\n' || c == '\r') {
      c = ' ';
    }
  }
  return out;
}

}  // namespace

SystemMessage build_system_message(const Scenario & scenario, const std::vector<CotExemplar> & exemplars)
{
  if (exemplars.empty()) {
    throw std::invalid_argument("system message needs at least one exemplar");
  }
  SystemMessage m;
  m.capability_preamble = trim(prompt_assets::capability_preamble());
  m.controller_description =
    replace_all(trim(prompt_assets::controller_description()), "{scenario}", to_string(scenario.kind));
  m.exemplars = exemplars;
  m.output_format_contract = output_format_contract(limits_for_speed_limit(scenario.speed_limit));
  return m;
}

std::string render_system_message(const SystemMessage & m)
{
  std::string out = m.capability_preamble + "\n" + m.controller_description + "\n\n";
  out += kExemplarIntro;
  out += "\n";
  for (std::size_t i = 0; i < m.exemplars.size(); ++i) {
    const auto & e = m.exemplars[i];
    if (i > 0) {
      out += "\n";
    }
    out += "Query: " + e.query + "\n";
    out += "Thought: " + e.thought + "\n";
    out += "Action:\n" + e.action + "\n";
  }
  out += "\n" + m.output_format_contract;
  return out;
}

namespace
{

constexpr std::string_view kNoFeedback = "(none yet)";
constexpr std::string_view kNotExecuted = "Status: not executed (";
constexpr std::string_view kUnparseable = "(program could not be parsed)";

}  // namespace

std::string render_memory(const std::vector<MemoryRecord> & records, std::size_t limit)
{
  const std::size_t n = std::min(limit, records.size());
  if (n == 0) {
    return std::string(kNoHistorySentence);
  }
  std::string out = trim(prompt_assets::memory_preamble()) + "\n";
  for (auto it = records.end() - static_cast<std::ptrdiff_t>(n); it != records.end(); ++it) {
    out += "\nCommand: " + one_line(it->command) + "\n";
    out += "Action:\n";
    const bool parses = std::holds_alternative<Lmp>(parse_lmp(it->lmp));
    out += parses ? trim(it->lmp) : std::string(kUnparseable);
    out += "\n";
    if (it->verdict != "accepted") {
      out += std::string(kNotExecuted) + it->verdict + ")\n";
    }
    out += "Evaluation: " + (it->feedback ? one_line(*it->feedback) : std::string(kNoFeedback)) + "\n";
  }
  return out;
}

std::vector<MemoryEntry> parse_memory(std::string_view memory_text)
{
  std::vector<MemoryEntry> out;
  bool in_action = false;
  for (const auto & raw : split_lines(memory_text)) {
    const std::string line = trim(raw);
    if (line.rfind("Command: ", 0) == 0) {
      out.push_back({});
      out.back().command = line.substr(9);
      in_action = false;
      continue;
    }
    if (out.empty()) {
      continue;
    }
    auto & e = out.back();
    if (line == "Action:") {
      in_action = true;
    } else if (line.rfind(kNotExecuted, 0) == 0) {
      e.executed = false;
      in_action = false;
    } else if (line.rfind("Evaluation: ", 0) == 0) {
      const std::string v = line.substr(12);
      if (v != kNoFeedback) {
        e.evaluation = v;
      }
      in_action = false;
    } else if (in_action && !line.empty()) {
      e.action += (e.action.empty() ? "" : "\n") + line;
    }
  }
  return out;
}

PromptBundle assemble(
  const std::string & command, const SystemMessage & system, const std::string & context, const std::string & memory)
{
  if (trim(command).empty()) {
    throw std::invalid_argument("command must be nonempty");
  }
  PromptBundle b;
  b.system = system;
  b.context = context;
  b.memory = memory.empty() ? std::string(kNoHistorySentence) : memory;
  b.command = command;
  return b;
}

namespace
{

constexpr std::string_view kSystemHeader = "### SYSTEM";
constexpr std::string_view kMemoryHeader = "### MEMORY";
constexpr std::string_view kContextHeader = "### CONTEXT";
constexpr std::string_view kCommandHeader = "### COMMAND";

std::vector<std::string> split_keep_empty(std::string_view text)
{
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      break;
    }
    out.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

std::string escape_section(std::string_view body)
{
  std::string out;
  const auto lines = split_keep_empty(body);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) {
      out += "\n";
    }
    if (lines[i].rfind("###", 0) == 0 || lines[i].rfind("\\", 0) == 0) {
      out += "\\";
    }
    out += lines[i];
  }
  return out;
}

void append_section(std::string & out, std::string_view header, std::string_view body)
{
  out += header;
  out += "\n";
  out += escape_section(body);
  out += "\n";
}

}  // namespace

std::string render_user_turn(const PromptBundle & b)
{
  std::string out;
  append_section(out, kMemoryHeader, b.memory);
  append_section(out, kContextHeader, b.context);
  append_section(out, kCommandHeader, b.command);
  return out;
}

std::string serialize_bundle(const PromptBundle & b)
{
  std::string out;
  append_section(out, kSystemHeader, render_system_message(b.system));
  out += render_user_turn(b);
  return out;
}

std::vector<ChatMessage> to_chat_messages(const PromptBundle & b)
{
  return {{"system", render_system_message(b.system)}, {"user", render_user_turn(b)}};
}

std::optional<BundleSections> split_bundle(std::string_view text)
{
  auto lines = split_keep_empty(text);
  if (!text.empty() && text.back() == '\n') {
    lines.pop_back();
  }
  BundleSections out;
  std::string * current = nullptr;
  std::vector<std::string> body;
  std::array<bool, 4> seen{};
  int last_index = -1;
  auto close = [&]() {
    if (current == nullptr) {
      return;
    }
    std::string joined;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (i > 0) {
        joined += "\n";
      }
      joined += body[i].rfind("\\", 0) == 0 ? body[i].substr(1) : body[i];
    }
    *current = std::move(joined);
    body.clear();
  };
  for (const auto & line : lines) {
    int index = -1;
    std::string * target = nullptr;
    if (line == kSystemHeader) {
      index = 0;
      target = &out.system;
    } else if (line == kMemoryHeader) {
      index = 1;
      target = &out.memory;
    } else if (line == kContextHeader) {
      index = 2;
      target = &out.context;
    } else if (line == kCommandHeader) {
      index = 3;
      target = &out.command;
    }
    if (target != nullptr) {
      if (index <= last_index || seen[static_cast<std::size_t>(index)]) {
        return std::nullopt;
      }
      close();
      current = target;
      seen[static_cast<std::size_t>(index)] = true;
      last_index = index;
    } else {
      if (current == nullptr) {
        return std::nullopt;
      }
      body.push_back(line);
    }
  }
  close();
  if (!seen[1] || !seen[2] || !seen[3]) {
    return std::nullopt;
  }
  return out;
}

}  // namespace lmpdrive
