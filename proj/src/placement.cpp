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

#include "bprr/placement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bprr/error.hpp"

namespace bprr {

namespace {

__extension__ typedef __int128 Wide;

int fitting_blocks(Bytes memory, Bytes block_bytes, Bytes cache_bytes, std::int64_t sessions,
                   int blocks) {
  const auto per_block = static_cast<Wide>(block_bytes) +
                         static_cast<Wide>(cache_bytes) * sessions;
  const auto fit = static_cast<Wide>(memory) / per_block;
  return static_cast<int>(std::min<Wide>(fit, blocks));
}

// Lexicographic comparison of the ascending-sorted values in two windows.
template <typename T>
bool lexicographically_smaller(const std::vector<T>& c, int a, int b, int m) {
  std::vector<T> x(c.begin() + a, c.begin() + a + m);
  std::vector<T> y(c.begin() + b, c.begin() + b + m);
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  return x < y;
}

}  // namespace

std::vector<int> conservative_block_counts(const Cluster& cluster, int target_requests) {
  require(target_requests >= 1, "target request count must be >= 1");
  const ModelSpec& model = cluster.model;
  std::vector<int> counts;
  counts.reserve(cluster.servers.size());
  for (const ServerSpec& s : cluster.servers) {
    counts.push_back(fitting_blocks(s.memory, model.block_bytes, model.cache_bytes(),
                                    target_requests, model.blocks));
  }
  return counts;
}

std::vector<int> amortized_order(const Cluster& cluster, const std::vector<int>& counts,
                                 const TokenBasis& basis) {
  std::vector<int> order;
  std::vector<double> key(counts.size(), 0.0);
  for (int j = 0; j < static_cast<int>(counts.size()); ++j) {
    if (counts[j] <= 0) continue;
    order.push_back(j);
    key[j] = amortized_time(cluster, j, counts[j], basis);
  }
  std::stable_sort(order.begin(), order.end(), [&key](int x, int y) { return key[x] < key[y]; });
  return order;
}

PlacementPlan place_sequentially(const Cluster& cluster, const std::vector<int>& order,
                                 const std::vector<int>& counts, WindowRule rule,
                                 int target_requests, const TokenBasis& basis) {
  const int n = cluster.server_count();
  const int L = cluster.model.blocks;
  require(static_cast<int>(counts.size()) == n, "one block count per server required");
  require(target_requests >= 1, "target request count must be >= 1");

  PlacementPlan plan;
  plan.target_requests = target_requests;
  plan.basis = basis;
  plan.counts.assign(n, 0);
  plan.amortized.assign(n, 0.0);
  plan.capacity.assign(n, 0);
  plan.placement.spans.assign(n, BlockSpan{});

  double slowest = 0.0;
  for (int j : order) {
    require(j >= 0 && j < n, "server index out of range");
    const int m = std::clamp(counts[j], 0, L);
    if (m == 0) continue;
    plan.order.push_back(j);
    plan.counts[j] = m;
    plan.amortized[j] = amortized_time(cluster, j, m, basis);
    plan.capacity[j] = server_capacity(cluster.model, cluster.servers[j], m);
    slowest = std::max(slowest, plan.amortized[j]);
  }

  const std::int64_t R = target_requests;
  const double t0 = 2.0 * slowest + 1.0;
  plan.block_capacity.assign(L + 1, 0);
  plan.block_time.assign(L + 1, t0 * static_cast<double>(R));
  std::vector<double> throughput(L + 1, 0.0);
  auto& C = plan.block_capacity;
  auto& T = plan.block_time;

  int placed = 0;
  for (int j : plan.order) {
    const int m = plan.counts[j];
    int best = 1;
    if (rule == WindowRule::kLeastThroughput) {
      for (int a = 2; a + m - 1 <= L; ++a) {
        if (lexicographically_smaller(throughput, a, best, m)) best = a;
      }
    } else if (std::any_of(C.begin() + 1, C.end(), [R](std::int64_t c) { return c < R; })) {
      double best_sum = -std::numeric_limits<double>::infinity();
      for (int a = 1; a + m - 1 <= L; ++a) {
        bool open = false;
        double sum = 0.0;
        for (int b = a; b < a + m; ++b) {
          open = open || C[b] < R;
          sum += T[b];
        }
        if (open && sum > best_sum) {
          best_sum = sum;
          best = a;
        }
      }
    } else {
      for (int a = 2; a + m - 1 <= L; ++a) {
        if (lexicographically_smaller(C, a, best, m)) best = a;
      }
    }

    plan.placement.spans[j] = BlockSpan{best, m};
    ++placed;
    const double speed = 1.0 / plan.amortized[j];
    for (int b = best; b < best + m; ++b) {
      const std::int64_t short_by = std::max<std::int64_t>(R - C[b], 0);
      T[b] -= (t0 - plan.amortized[j]) * static_cast<double>(std::min(short_by, plan.capacity[j]));
      C[b] += plan.capacity[j];
      throughput[b] += speed;
    }
    if (plan.covering_servers == 0 && plan.placement.covers(L)) plan.covering_servers = placed;
  }
  plan.feasible = plan.covering_servers > 0;
  return plan;
}

PlacementPlan cg_block_placement(const Cluster& cluster, int target_requests,
                                 const TokenBasis& basis) {
  const std::vector<int> counts = conservative_block_counts(cluster, target_requests);
  PlacementPlan plan = place_sequentially(cluster, amortized_order(cluster, counts, basis), counts,
                                          WindowRule::kConservativeGreedy, target_requests, basis);
  if (!plan.feasible) {
    throw Error(ErrorCode::kPlacementInfeasible,
                "servers cannot cover every block with R = " + std::to_string(target_requests));
  }
  return plan;
}

bool cg_feasibility(const Cluster& cluster, int target_requests) {
  const std::vector<int> counts = conservative_block_counts(cluster, target_requests);
  const std::int64_t total = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
  return total >= cluster.model.blocks;
}

int max_guaranteed_requests(const Cluster& cluster) {
  const ModelSpec& model = cluster.model;
  Wide memory = 0;
  for (const ServerSpec& s : cluster.servers) memory += s.memory;
  const Wide slots = model.blocks + cluster.server_count();
  const Wide free = memory - static_cast<Wide>(model.block_bytes) * slots;
  if (free <= 0) return 0;
  const Wide r = free / (static_cast<Wide>(model.cache_bytes()) * slots);
  return static_cast<int>(std::min<Wide>(r, std::numeric_limits<int>::max()));
}

int tune_target_requests(double arrival_rate, double session_duration, const Cluster& cluster) {
  require(arrival_rate >= 0.0 && session_duration >= 0.0, "rate and duration must be >= 0");
  const double mean = arrival_rate * session_duration;
  const double estimate = std::floor(mean + std::sqrt(mean));
  const double cap = max_guaranteed_requests(cluster);
  return static_cast<int>(std::max(1.0, std::min(estimate, cap)));
}

}  // namespace bprr
