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

#include "bprr/bounds.hpp"

#include <algorithm>
#include <numeric>

#include "bprr/error.hpp"

namespace bprr {

Seconds cg_upper_bound(const Cluster& cluster, const PlacementPlan& plan) {
  if (!plan.feasible) throw Error(ErrorCode::kPlacementInfeasible, "plan does not cover all blocks");
  double bound = 0.0;
  int hosted = 0;
  int last = 0;
  for (int k = 0; k < plan.covering_servers; ++k) {
    last = plan.order[k];
    bound += plan.amortized[last] * plan.counts[last];
    hosted += plan.counts[last];
  }
  return bound - plan.basis.tau(cluster, last) * (hosted - cluster.model.blocks);
}

Seconds lower_bound(const Cluster& cluster, int client, const TokenBasis& basis) {
  const ModelSpec& model = cluster.model;
  const int L = model.blocks;
  struct Entry {
    double time;
    int blocks;
  };
  std::vector<Entry> entries;
  for (int j = 0; j < cluster.server_count(); ++j) {
    const Bytes per_block = model.block_bytes + model.cache_bytes();
    const int m = static_cast<int>(std::min<Bytes>(cluster.servers[j].memory / per_block, L));
    if (m < 1) continue;
    entries.push_back({basis.tau(cluster, j) + basis.rtt(cluster, client, j) / m, m});
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& x, const Entry& y) { return x.time < y.time; });
  double total = 0.0;
  int left = L;
  for (const Entry& e : entries) {
    const int take = std::min(left, e.blocks);
    total += e.time * take;
    left -= take;
    if (left == 0) return total;
  }
  throw Error(ErrorCode::kInfeasible, "servers cannot host every block even for one session");
}

Seconds weighted_lower_bound(const Cluster& cluster, const std::vector<Request>& requests,
                             const TokenBasis& basis) {
  require(!requests.empty(), "weighted lower bound needs at least one request");
  std::vector<int> per_client(cluster.clients.size(), 0);
  for (const Request& r : requests) ++per_client.at(r.client);
  double total = 0.0;
  for (int c = 0; c < cluster.client_count(); ++c) {
    if (per_client[c] > 0) total += per_client[c] * lower_bound(cluster, c, basis);
  }
  return total / static_cast<double>(requests.size());
}

double approximation_ratio(const Cluster& cluster, const PlacementPlan& plan,
                           const std::vector<Request>& requests) {
  return cg_upper_bound(cluster, plan) / weighted_lower_bound(cluster, requests, plan.basis);
}

Seconds realized_average(const Cluster& cluster, const PlacementPlan& plan,
                         const std::vector<Request>& requests) {
  require(!requests.empty(), "realized average needs at least one request");
  std::vector<double> cost(cluster.clients.size(), -1.0);
  double total = 0.0;
  for (const Request& r : requests) {
    double& c = cost.at(r.client);
    if (c < 0.0) {
      const PathResult best = shortest_path(feasible_subgraph(
          cluster, plan.placement, r.client, basis_edge_cost(cluster, r.client, plan.basis)));
      if (!best.found) throw Error(ErrorCode::kNoFeasiblePath, "placement leaves no path");
      c = best.cost;
    }
    total += c;
  }
  return total / static_cast<double>(requests.size());
}

Seconds online_completion_bound(const Cluster& cluster, const PlacementPlan& plan,
                                const RoutingOutcome& outcome, int output_tokens,
                                int concurrent, int target_requests) {
  if (concurrent <= target_requests) return output_tokens * cg_upper_bound(cluster, plan);
  return outcome.path_cost;
}

}  // namespace bprr
