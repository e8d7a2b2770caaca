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

#include "bprr/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bprr/error.hpp"

namespace bprr {

LogicalGraph build_logical_graph(const Cluster& cluster) {
  if (cluster.servers.empty()) throw Error(ErrorCode::kEmptyCluster, "cluster has no servers");
  LogicalGraph g;
  g.clients = cluster.client_count();
  g.servers = cluster.server_count();
  for (int c = 0; c < g.clients; ++c) {
    for (int j = 0; j < g.servers; ++j) g.edges.emplace_back(g.source_node(c), g.server_node(j));
  }
  for (int i = 0; i < g.servers; ++i) {
    for (int j = 0; j < g.servers; ++j) {
      if (i != j && cluster.link_allowed(i, j)) g.edges.emplace_back(g.server_node(i), g.server_node(j));
    }
  }
  for (int j = 0; j < g.servers; ++j) {
    for (int c = 0; c < g.clients; ++c) g.edges.emplace_back(g.server_node(j), g.sink_node(c));
  }
  return g;
}

bool edge_feasible(const Placement& placement, int blocks, int prev_node, int next_node) {
  return edge_feasible(node_span(placement, prev_node, blocks),
                       node_span(placement, next_node, blocks));
}

bool path_feasible(const Placement& placement, int blocks, std::span<const int> chain) {
  if (chain.empty()) return false;
  int prev = kSourceNode;
  for (int server : chain) {
    if (server < 0 || server >= placement.size()) return false;
    if (!edge_feasible(placement, blocks, prev, server)) return false;
    prev = server;
  }
  return edge_feasible(placement, blocks, prev, kSinkNode);
}

int processed_blocks(const Placement& placement, int blocks, int prev_node, int server) {
  return processed_blocks(node_span(placement, prev_node, blocks),
                          node_span(placement, server, blocks));
}

EdgeCostFn decode_edge_cost(const Cluster& cluster, int client) {
  return basis_edge_cost(cluster, client, TokenBasis::decode());
}

EdgeCostFn basis_edge_cost(const Cluster& cluster, int client, TokenBasis basis) {
  return [&cluster, client, basis](int, int server, int blocks) {
    return basis.rtt(cluster, client, server) + basis.tau(cluster, server) * blocks;
  };
}

FeasibleSubgraph::FeasibleSubgraph(int servers, int blocks, std::vector<int> frontier,
                                   std::vector<SubgraphEdge> edges)
    : blocks_(blocks), frontier_(std::move(frontier)), edges_(std::move(edges)) {
  require(static_cast<int>(frontier_.size()) == servers + 2, "frontier size mismatch");
  std::sort(edges_.begin(), edges_.end(), [](const SubgraphEdge& x, const SubgraphEdge& y) {
    return x.from != y.from ? x.from < y.from : x.to < y.to;
  });
  offsets_.assign(frontier_.size() + 1, 0);
  for (const SubgraphEdge& e : edges_) ++offsets_[e.from + 1];
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  order_.resize(frontier_.size());
  std::iota(order_.begin(), order_.end(), 0);
  std::stable_sort(order_.begin(), order_.end(),
                   [this](int x, int y) { return frontier_[x] < frontier_[y]; });
}

std::span<const SubgraphEdge> FeasibleSubgraph::out_edges(int node) const {
  return std::span<const SubgraphEdge>(edges_).subspan(offsets_.at(node),
                                                       offsets_.at(node + 1) - offsets_[node]);
}

FeasibleSubgraph feasible_subgraph(const Cluster& cluster, const Placement& placement,
                                   int client) {
  return feasible_subgraph(cluster, placement, client, decode_edge_cost(cluster, client));
}

FeasibleSubgraph feasible_subgraph(const Cluster& cluster, const Placement& placement, int client,
                                   const EdgeCostFn& cost) {
  const int n = cluster.server_count();
  const int L = cluster.model.blocks;
  require(placement.size() == n, "placement size differs from server count");
  require(client >= 0 && client < cluster.client_count(), "client index out of range");

  std::vector<int> frontier(static_cast<std::size_t>(n) + 2);
  frontier[0] = source_span().end();
  frontier[n + 1] = sink_span(L).end();
  for (int j = 0; j < n; ++j) frontier[j + 1] = placement.spans[j].end();

  std::vector<SubgraphEdge> edges;
  auto add = [&](int prev, int next) {
    if (!edge_feasible(placement, L, prev, next)) return;
    const int from = prev == kSourceNode ? 0 : prev + 1;
    if (next == kSinkNode) {
      edges.push_back({from, n + 1, 0, 0.0});
      return;
    }
    const int k = processed_blocks(placement, L, prev, next);
    edges.push_back({from, next + 1, k, cost(prev, next, k)});
  };
  for (int j = 0; j < n; ++j) {
    if (placement.spans[j].empty()) continue;
    add(kSourceNode, j);
    for (int i = 0; i < n; ++i) {
      if (i != j && !placement.spans[i].empty() && cluster.link_allowed(i, j)) add(i, j);
    }
    add(j, kSinkNode);
  }
  return FeasibleSubgraph(n, L, std::move(frontier), std::move(edges));
}

PathResult shortest_path(const FeasibleSubgraph& graph) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const int N = graph.node_count();
  std::vector<double> dist(N, kInf);
  std::vector<const SubgraphEdge*> via(N, nullptr);
  dist[graph.source()] = 0.0;
  for (int u : graph.order()) {
    if (dist[u] == kInf) continue;
    for (const SubgraphEdge& e : graph.out_edges(u)) {
      if (std::isinf(e.cost)) continue;
      const double d = dist[u] + e.cost;
      if (d < dist[e.to] || (d == dist[e.to] && via[e.to] != nullptr && u < via[e.to]->from)) {
        dist[e.to] = d;
        via[e.to] = &e;
      }
    }
  }
  PathResult result;
  if (dist[graph.sink()] == kInf) return result;
  std::vector<const SubgraphEdge*> path;
  for (int v = graph.sink(); v != graph.source(); v = via[v]->from) path.push_back(via[v]);
  std::reverse(path.begin(), path.end());
  result.found = true;
  result.cost = dist[graph.sink()];
  result.route = to_route(path);
  return result;
}

void for_each_path(const FeasibleSubgraph& graph,
                   const std::function<void(std::span<const SubgraphEdge* const>)>& visit,
                   std::size_t budget) {
  std::vector<const SubgraphEdge*> stack;
  std::size_t produced = 0;
  auto dfs = [&](auto&& self, int u) -> void {
    if (u == graph.sink()) {
      if (++produced > budget) {
        throw Error(ErrorCode::kBudgetExceeded, "path enumeration budget exhausted");
      }
      visit(stack);
      return;
    }
    for (const SubgraphEdge& e : graph.out_edges(u)) {
      stack.push_back(&e);
      self(self, e.to);
      stack.pop_back();
    }
  };
  dfs(dfs, graph.source());
}

RouteAssignment to_route(std::span<const SubgraphEdge* const> path) {
  RouteAssignment route;
  for (const SubgraphEdge* e : path) {
    if (e->blocks == 0) continue;
    route.servers.push_back(FeasibleSubgraph::server_of_node(e->to));
    route.blocks.push_back(e->blocks);
  }
  return route;
}

}  // namespace bprr
