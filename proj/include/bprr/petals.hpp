// Copyright 2026 The bprr Authors. All Rights Reserved.
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

#pragma once

#include <span>
#include <vector>

#include "bprr/model.hpp"
#include "bprr/placement.hpp"
#include "bprr/routing.hpp"

namespace bprr {

/// m_j = min(floor(M_j / (s_m + s_c * cache_sessions)), L): a fixed cache
/// reservation that ignores the expected load.
std::vector<int> petals_block_counts(const Cluster& cluster, int cache_sessions = 1);

/// Servers join in `arrival_order`; each takes the window whose sorted
/// per-block throughput is lexicographically smallest, leftmost on ties.
PlacementPlan petals_place(const Cluster& cluster, const std::vector<int>& arrival_order,
                           int cache_sessions = 1,
                           const TokenBasis& basis = TokenBasis::decode());

/// Baseline windows and counts, servers taken in increasing amortized time.
PlacementPlan optimized_order_place(const Cluster& cluster, int cache_sessions = 1,
                                    const TokenBasis& basis = TokenBasis::decode());

/// Baseline windows and order with the conservative greedy block counts.
PlacementPlan optimized_number_place(const Cluster& cluster, const std::vector<int>& arrival_order,
                                     int target_requests,
                                     const TokenBasis& basis = TokenBasis::decode());

/// Shortest path under per-token latency plus processing time, blind to
/// server load. Throws kNoFeasiblePath.
RouteAssignment petals_route(const Cluster& cluster, const Placement& placement, int client,
                             std::span<const ServerState> states);

}  // namespace bprr
