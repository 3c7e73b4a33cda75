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

#ifndef LMPDRIVE__TEXT_HPP_
#define LMPDRIVE__TEXT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lmpdrive
{

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);
bool starts_with_icase(std::string_view text, std::string_view prefix);
std::vector<std::string> split_lines(std::string_view text);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
/// Fixed one-decimal rendering ("38.0").
std::string format_fixed1(double value);
std::optional<double> parse_double(std::string_view text);

/// Current wall-clock time, UTC, ISO 8601 to the second.
std::string utc_timestamp();

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace lmpdrive

#endif  // LMPDRIVE__TEXT_HPP_
