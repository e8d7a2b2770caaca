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

#include "bprr/model.hpp"

namespace bprr {

enum class WindowRule {
  /// Before coverage: the window with the largest remaining amortized time that
  /// still contains an under-served block. After coverage: the window whose
  /// sorted capacity vector is lexicographically smallest.
  kConservativeGreedy,
  /// The window whose sorted per-block throughput vector is lexicographically
  /// smallest, where a block's throughput is the sum of 1 / amortized time
  /// over its hosting servers.
  kLeastThroughput,
};

struct PlacementPlan {
  Placement placement;
  std::vector<int> order;                 // usable servers in processing order
  int covering_servers = 0;               // K; 0 when coverage was never reached
  bool feasible = false;
  int target_requests = 0;                // R
  TokenBasis basis;
  std::vector<int> counts;                // m_j per server, 0 when unusable
  std::vector<double> amortized;          // amortized time per server, 0 when unusable
  std::vector<std::int64_t> capacity;     // sessions per server at its m_j
  std::vector<std::int64_t> block_capacity;  // C_b, index 1..L
  std::vector<double> block_time;            // T_b, index 1..L
};

/// m_j = min(floor(M_j / (s_m + s_c R)), L); 0 marks an unusable server.
std::vector<int> conservative_block_counts(const Cluster& cluster, int target_requests);

/// Servers with a positive count, by increasing amortized time, ties by index.
std::vector<int> amortized_order(const Cluster& cluster, const std::vector<int>& counts,
                                 const TokenBasis& basis = TokenBasis::decode());

/// Places each server of `order` in turn, taking counts[j] contiguous blocks
/// chosen by `rule`. Never throws on incomplete coverage; see `feasible`.
PlacementPlan place_sequentially(const Cluster& cluster, const std::vector<int>& order,
                                 const std::vector<int>& counts, WindowRule rule,
                                 int target_requests,
                                 const TokenBasis& basis = TokenBasis::decode());

/// Conservative greedy block placement. Throws kPlacementInfeasible.
PlacementPlan cg_block_placement(const Cluster& cluster, int target_requests,
                                 const TokenBasis& basis = TokenBasis::decode());

/// sum_j min(floor(M_j / (s_m + s_c R)), L) >= L.
bool cg_feasibility(const Cluster& cluster, int target_requests);

/// floor((sum_j M_j - s_m (L + n)) / (s_c (L + n))), clamped at 0.
int max_guaranteed_requests(const Cluster& cluster);

/// Mean plus one Poisson standard deviation of the concurrent session count,
/// clamped to [1, max_guaranteed_requests].
int tune_target_requests(double arrival_rate, double session_duration, const Cluster& cluster);

}  // namespace bprr
