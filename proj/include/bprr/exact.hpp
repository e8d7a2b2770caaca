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

#include <cstdint>
#include <vector>

#include "bprr/execution.hpp"
#include "bprr/model.hpp"

namespace bprr {

struct ExactLimits {
  int max_blocks = 5;
  int max_servers = 4;
  int max_requests = 5;
};

struct ExactOptions {
  ExactLimits limits;
  /// Charge each request its own cache size and all-token average times,
  /// weighted by its output length. Otherwise every request is charged the
  /// maximum-length cache and the decode per-token time.
  bool heterogeneous = false;
  Execution execution = Execution::kParallel;
};

struct ExactSolution {
  Placement placement;
  std::vector<RouteAssignment> routes;  // one per request, in input order
  double objective = 0.0;
  std::int64_t placements_visited = 0;
  std::int64_t assignments_visited = 0;

  double average(std::size_t requests) const {
    return requests == 0 ? 0.0 : objective / static_cast<double>(requests);
  }
};

/// Exhaustive joint placement and routing optimum for tiny instances.
/// Throws kBudgetExceeded above the limits and kInfeasible when no placement
/// admits every request.
ExactSolution solve_exact(const Cluster& cluster, const std::vector<Request>& requests,
                          const ExactOptions& options = {});

}  // namespace bprr
