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

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "bprr/model.hpp"

namespace bprr {

/// Client-independent routing graph: every client appears twice, once as a
/// source and once as a sink. Node ids: sources [0, C), servers [C, C + n),
/// sinks [C + n, 2C + n).
struct LogicalGraph {
  int clients = 0;
  int servers = 0;
  std::vector<std::pair<int, int>> edges;

  int source_node(int client) const noexcept { return client; }
  int server_node(int server) const noexcept { return clients + server; }
  int sink_node(int client) const noexcept { return clients + servers + client; }
  std::size_t edge_count() const noexcept { return edges.size(); }
};

/// Throws kEmptyCluster when the cluster has no servers.
LogicalGraph build_logical_graph(const Cluster& cluster);

// Feasibility over routing nodes: kSourceNode, a server index, or kSinkNode.
bool edge_feasible(const Placement& placement, int blocks, int prev_node, int next_node);
bool path_feasible(const Placement& placement, int blocks, std::span<const int> chain);
int processed_blocks(const Placement& placement, int blocks, int prev_node, int server);

/// Cost of entering `server` from `prev_node` while processing `blocks` blocks.
/// Returning +inf removes the edge.
using EdgeCostFn = std::function<double(int prev_node, int server, int blocks)>;

EdgeCostFn decode_edge_cost(const Cluster& cluster, int client);
EdgeCostFn basis_edge_cost(const Cluster& cluster, int client, TokenBasis basis);

struct SubgraphEdge {
  int from = 0;
  int to = 0;
  int blocks = 0;  // processed at `to`; 0 for edges into the sink
  double cost = 0.0;
};

/// The part of the routing graph one client may use under a placement.
/// Local node ids: 0 is the source, server j is j + 1, the sink is n + 1.
class FeasibleSubgraph {
 public:
  FeasibleSubgraph(int servers, int blocks, std::vector<int> frontier,
                   std::vector<SubgraphEdge> edges);

  int node_count() const noexcept { return static_cast<int>(frontier_.size()); }
  int source() const noexcept { return 0; }
  int sink() const noexcept { return node_count() - 1; }
  static int node_of_server(int server) noexcept { return server + 1; }
  static int server_of_node(int node) noexcept { return node - 1; }
  /// a + m of the node's span; strictly increases along every edge.
  int frontier(int node) const { return frontier_.at(node); }

  std::span<const SubgraphEdge> edges() const noexcept { return edges_; }
  std::span<const SubgraphEdge> out_edges(int node) const;
  /// Nodes ordered by (frontier, id), a topological order.
  const std::vector<int>& order() const noexcept { return order_; }
  int blocks() const noexcept { return blocks_; }

 private:
  int blocks_;
  std::vector<int> frontier_;
  std::vector<SubgraphEdge> edges_;  // sorted by (from, to)
  std::vector<std::size_t> offsets_;
  std::vector<int> order_;
};

FeasibleSubgraph feasible_subgraph(const Cluster& cluster, const Placement& placement, int client);
FeasibleSubgraph feasible_subgraph(const Cluster& cluster, const Placement& placement, int client,
                                   const EdgeCostFn& cost);

struct PathResult {
  bool found = false;
  double cost = 0.0;
  RouteAssignment route;
};

/// Least-cost source-to-sink path. Equal costs resolve to the smaller
/// predecessor id. Edges of infinite cost are ignored.
PathResult shortest_path(const FeasibleSubgraph& graph);

/// Calls `visit` with the edges of every source-to-sink path in DFS order.
/// Throws kBudgetExceeded once more than `budget` paths have been produced.
void for_each_path(const FeasibleSubgraph& graph,
                   const std::function<void(std::span<const SubgraphEdge* const>)>& visit,
                   std::size_t budget);

RouteAssignment to_route(std::span<const SubgraphEdge* const> path);

}  // namespace bprr
