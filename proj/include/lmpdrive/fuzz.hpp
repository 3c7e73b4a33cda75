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

#ifndef LMPDRIVE__FUZZ_HPP_
#define LMPDRIVE__FUZZ_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lmpdrive/lmp.hpp"

namespace lmpdrive
{

/// Random program-like text: well-formed programs with arbitrary values,
/// byte-level mutations of them, structural breakage and plain noise.
std::string random_lmp_text(std::mt19937_64 & rng);

struct FuzzFailure
{
  std::size_t case_index{0};
  std::string text;
  std::string problem;
};

struct FuzzReport
{
  std::size_t cases{0};
  std::size_t accepted{0};
  std::size_t format_rejected{0};
  std::size_t parameter_rejected{0};
  std::vector<FuzzFailure> failures;  ///< crashes, unsound accepts, or state changes on rejection
};

/// Gate plus executor over `count` random texts. A case fails when the gate
/// throws, accepts a value outside `limits`, or a rejected program alters the
/// follower config or world tracking in any bit.
FuzzReport fuzz_gate(std::size_t count, std::uint64_t seed, const SafetyLimits & limits);

}  // namespace lmpdrive

#endif  // LMPDRIVE__FUZZ_HPP_
