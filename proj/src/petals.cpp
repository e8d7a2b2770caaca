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

#include "bprr/petals.hpp"

#include <algorithm>

#include "bprr/error.hpp"

namespace bprr {

std::vector<int> petals_block_counts(const Cluster& cluster, int cache_sessions) {
  require(cache_sessions >= 1, "cache reservation must cover at least one session");
  return conservative_block_counts(cluster, cache_sessions);
}

PlacementPlan petals_place(const Cluster& cluster, const std::vector<int>& arrival_order,
                           int cache_sessions, const TokenBasis& basis) {
  return place_sequentially(cluster, arrival_order, petals_block_counts(cluster, cache_sessions),
                            WindowRule::kLeastThroughput, cache_sessions, basis);
}

PlacementPlan optimized_order_place(const Cluster& cluster, int cache_sessions,
                                    const TokenBasis& basis) {
  const std::vector<int> counts = petals_block_counts(cluster, cache_sessions);
  return place_sequentially(cluster, amortized_order(cluster, counts, basis), counts,
                            WindowRule::kLeastThroughput, cache_sessions, basis);
}

PlacementPlan optimized_number_place(const Cluster& cluster, const std::vector<int>& arrival_order,
                                     int target_requests, const TokenBasis& basis) {
  return place_sequentially(cluster, arrival_order,
                            conservative_block_counts(cluster, target_requests),
                            WindowRule::kLeastThroughput, target_requests, basis);
}

RouteAssignment petals_route(const Cluster& cluster, const Placement& placement, int client,
                             std::span<const ServerState> states) {
  require(static_cast<int>(states.size()) == cluster.server_count(), "one state per server");
  return offline_route(cluster, placement, client, TokenBasis::decode());
}

}  // namespace bprr
