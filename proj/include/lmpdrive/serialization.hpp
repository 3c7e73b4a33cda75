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

#ifndef LMPDRIVE__SERIALIZATION_HPP_
#define LMPDRIVE__SERIALIZATION_HPP_

#include "json.hpp"
#include "lmpdrive/lmp.hpp"
#include "lmpdrive/memory_store.hpp"
#include "lmpdrive/metrics.hpp"
#include "lmpdrive/session.hpp"

namespace lmpdrive
{

// JSON views shared by the service, the CLI and the session artifacts.
nlohmann::json to_json(const FollowerConfig & cfg);
nlohmann::json to_json(const Verdict & verdict);
nlohmann::json to_json(const MetricsReport & report);
nlohmann::json to_json(const TripSummary & trip);
nlohmann::json to_json(const FlowRecord & flow);
nlohmann::json to_json(const TelemetryFrame & frame);
nlohmann::json to_json(const MemoryRecord & record);

}  // namespace lmpdrive

#endif  // LMPDRIVE__SERIALIZATION_HPP_
