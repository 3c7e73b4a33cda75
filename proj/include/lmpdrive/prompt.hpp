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

#ifndef LMPDRIVE__PROMPT_HPP_
#define LMPDRIVE__PROMPT_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lmpdrive/lmp.hpp"
#include "lmpdrive/memory_store.hpp"
#include "lmpdrive/sim.hpp"

namespace lmpdrive
{

namespace prompt_assets
{
// Contents of assets/prompts/*.txt, embedded at build time.
std::string_view capability_preamble();
std::string_view controller_description();
std::string_view exemplars();
std::string_view memory_preamble();
}  // namespace prompt_assets

inline constexpr std::size_t kDefaultMemoryWindow = 10;
inline constexpr std::string_view kNoHistorySentence = "No prior interactions recorded for this driver.";
inline constexpr std::string_view kExemplarIntro = "Worked examples:";

/// {query, thought, action} chain-of-thought demonstration.
struct CotExemplar
{
  std::string query;
  std::string thought;
  std::string action;

  friend bool operator==(const CotExemplar &, const CotExemplar &) = default;
};

/// Parses `Query:/Thought:/Action:` blocks separated by `---` lines.
/// Throws std::invalid_argument on a block with an empty part.
std::vector<CotExemplar> parse_exemplars(std::string_view text);
std::vector<CotExemplar> default_exemplars();

struct SystemMessage
{
  std::string capability_preamble;
  std::string controller_description;
  std::vector<CotExemplar> exemplars;
  std::string output_format_contract;
};

/// Throws std::invalid_argument when `exemplars` is empty.
SystemMessage build_system_message(const Scenario & scenario, const std::vector<CotExemplar> & exemplars);
std::string render_system_message(const SystemMessage & message);

/// Memory section H: preamble plus the newest `limit` records, oldest first.
std::string render_memory(const std::vector<MemoryRecord> & records, std::size_t limit = kDefaultMemoryWindow);

/// One Command/Action/Evaluation entry as it appears in H.
struct MemoryEntry
{
  std::string command;
  std::string action;
  std::optional<std::string> evaluation;
  bool executed{true};
};

/// Reads the entries back out of a rendered memory section.
std::vector<MemoryEntry> parse_memory(std::string_view memory_text);

struct PromptBundle
{
  SystemMessage system;
  std::string context;
  std::string memory;
  std::string command;
};

/// Throws std::invalid_argument when the command is empty.
PromptBundle assemble(
  const std::string & command, const SystemMessage & system, const std::string & context, const std::string & memory);

struct ChatMessage
{
  std::string role;
  std::string content;
};

/// system = S; one user turn holding H, then C, then I under labeled headers.
std::vector<ChatMessage> to_chat_messages(const PromptBundle & bundle);
std::string render_user_turn(const PromptBundle & bundle);

/// All four sections under `### SYSTEM|MEMORY|CONTEXT|COMMAND` headers.
std::string serialize_bundle(const PromptBundle & bundle);

struct BundleSections
{
  std::string system;
  std::string memory;
  std::string context;
  std::string command;

  friend bool operator==(const BundleSections &, const BundleSections &) = default;
};

/// Splits serialize_bundle or render_user_turn output back into sections.
std::optional<BundleSections> split_bundle(std::string_view text);

}  // namespace lmpdrive

#endif  // LMPDRIVE__PROMPT_HPP_
