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

#include <vector>

#include "bprr/model.hpp"
#include "bprr/placement.hpp"
#include "bprr/routing.hpp"

namespace bprr {

/// Worst-case per-token time of the greedy placement: the route through its
/// first K servers taken by the farthest client. Uses the plan's basis.
Seconds cg_upper_bound(const Cluster& cluster, const PlacementPlan& plan);

/// Per-token time no joint placement can beat for `client`, obtained by
/// filling the L blocks with the servers of least amortized time at their
/// largest single-session block counts. Throws kInfeasible.
Seconds lower_bound(const Cluster& cluster, int client,
                    const TokenBasis& basis = TokenBasis::decode());

/// Request-weighted mean of lower_bound over the clients of `requests`.
Seconds weighted_lower_bound(const Cluster& cluster, const std::vector<Request>& requests,
                             const TokenBasis& basis = TokenBasis::decode());

/// cg_upper_bound / weighted_lower_bound.
double approximation_ratio(const Cluster& cluster, const PlacementPlan& plan,
                           const std::vector<Request>& requests);

/// Mean per-token time when every request follows its client's shortest path
/// under the plan's placement.
Seconds realized_average(const Cluster& cluster, const PlacementPlan& plan,
                         const std::vector<Request>& requests);

/// l_out times the upper bound while at most R sessions run, otherwise the
/// waiting-penalized path cost of the decision.
Seconds online_completion_bound(const Cluster& cluster, const PlacementPlan& plan,
                                const RoutingOutcome& outcome, int output_tokens,
                                int concurrent, int target_requests);

}  // namespace bprr
