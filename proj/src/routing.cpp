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

#include "bprr/routing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bprr/error.hpp"

namespace bprr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool end_order(const Session& x, const Session& y) {
  return x.end != y.end ? x.end < y.end : x.request < y.request;
}

double hop_cost(const Cluster& cluster, int client, const TokenBasis& basis, int server,
                int blocks) {
  return basis.rtt(cluster, client, server) + basis.tau(cluster, server) * blocks;
}

}  // namespace

ServerState ServerState::for_server(const Cluster& cluster, const Placement& placement,
                                    int server, CacheAccounting accounting) {
  const ModelSpec& model = cluster.model;
  const Bytes free = cluster.servers.at(server).memory -
                     model.block_bytes * placement.spans.at(server).count;
  require(free >= 0, "placement exceeds server memory");
  if (accounting == CacheAccounting::kBytes) return ServerState(free);
  return ServerState(free / model.cache_bytes());
}

std::int64_t ServerState::units_after(double at) const {
  std::int64_t total = 0;
  for (const Session& s : sessions_) {
    if (s.end > at) total += s.units;
  }
  return total;
}

std::int64_t ServerState::units_in_use(double at) const {
  std::int64_t total = 0;
  for (const Session& s : sessions_) {
    if (s.start <= at && at < s.end) total += s.units;
  }
  return total;
}

bool ServerState::fits(const Session& session) const {
  return session.units >= 0 && units_after(session.start) + session.units <= capacity_;
}

void ServerState::admit(const Session& session) {
  if (!fits(session)) {
    throw Error(ErrorCode::kCapacityViolated,
                "session of request " + std::to_string(session.request) + " needs " +
                    std::to_string(session.units) + " units, " +
                    std::to_string(capacity_ - units_after(session.start)) + " free");
  }
  sessions_.insert(std::upper_bound(sessions_.begin(), sessions_.end(), session, end_order),
                   session);
}

bool ServerState::release(int request) {
  const auto it = std::find_if(sessions_.begin(), sessions_.end(),
                               [request](const Session& s) { return s.request == request; });
  if (it == sessions_.end()) return false;
  sessions_.erase(it);
  return true;
}

void ServerState::expire(double now) {
  std::erase_if(sessions_, [now](const Session& s) { return s.end <= now; });
}

bool ServerState::invariant_holds() const {
  if (!std::is_sorted(sessions_.begin(), sessions_.end(), end_order)) return false;
  for (const Session& s : sessions_) {
    if (s.units < 0 || s.end < s.start) return false;
    if (units_in_use(s.start) > capacity_) return false;
  }
  return true;
}

double release_time(const ServerState& state, double now, std::int64_t needed) {
  require(needed >= 1, "needed units must be >= 1");
  const auto sessions = state.sessions();
  std::int64_t held = 0;
  for (const Session& s : sessions) held += s.units;
  if (state.capacity() - held >= needed) return now;
  for (const Session& s : sessions) {
    held -= s.units;
    if (state.capacity() - held >= needed) return std::max(now, s.end);
  }
  return kInf;
}

double waiting_time(const ServerState& state, double now, std::int64_t needed) {
  const double at = release_time(state, now, needed);
  return std::isinf(at) ? kInf : at - now;
}

TokenBasis RouteDemand::basis() const {
  return all_token_cost ? TokenBasis::all_tokens(input_tokens, output_tokens)
                        : TokenBasis::decode();
}

std::int64_t RouteDemand::units(const ModelSpec& model, int blocks) const {
  if (accounting == CacheAccounting::kSlots) return blocks;
  return blocks * model.cache_bytes(input_tokens, output_tokens);
}

RouteAssignment offline_route(const Cluster& cluster, const Placement& placement, int client,
                              const TokenBasis& basis) {
  const PathResult best =
      shortest_path(feasible_subgraph(cluster, placement, client,
                                      basis_edge_cost(cluster, client, basis)));
  if (!best.found) throw Error(ErrorCode::kNoFeasiblePath, "placement leaves no feasible path");
  return best.route;
}

RoutingOutcome evaluate_route(const Cluster& cluster, const Placement&, int client,
                              std::span<const ServerState> states, double now,
                              const RouteDemand& demand, const RouteAssignment& route) {
  const TokenBasis basis = demand.basis();
  const double l_out = demand.output_tokens;
  RoutingOutcome out;
  out.route = route;
  out.start_time = now;
  double cost_sum = 0.0;
  for (std::size_t h = 0; h < route.servers.size(); ++h) {
    const int j = route.servers[h];
    const double at = release_time(states[j], now, demand.units(cluster.model, route.blocks[h]));
    const double w = std::isinf(at) ? kInf : at - now;
    out.start_time = std::max(out.start_time, at);
    const double c = hop_cost(cluster, client, basis, j, route.blocks[h]);
    out.hop_waits.push_back(w);
    out.hop_costs.push_back(c);
    out.wait_time = std::max(out.wait_time, w);
    out.path_cost += w + l_out * c;
    cost_sum += c;
  }
  out.completion_estimate = out.wait_time + l_out * cost_sum;
  return out;
}

RoutingOutcome ws_route(const Cluster& cluster, const Placement& placement, int client,
                        std::span<const ServerState> states, double now,
                        const RouteDemand& demand) {
  require(static_cast<int>(states.size()) == cluster.server_count(), "one state per server");
  const TokenBasis basis = demand.basis();
  const double l_out = demand.output_tokens;
  // Costs are divided by l_out so that zero waits reproduce offline_route bit for bit.
  const EdgeCostFn cost = [&](int, int server, int blocks) {
    const double w = waiting_time(states[server], now, demand.units(cluster.model, blocks));
    if (std::isinf(w)) return kInf;
    return w / l_out + hop_cost(cluster, client, basis, server, blocks);
  };
  const PathResult best = shortest_path(feasible_subgraph(cluster, placement, client, cost));
  if (!best.found) throw Error(ErrorCode::kNoFeasiblePath, "every path waits forever");
  return evaluate_route(cluster, placement, client, states, now, demand, best.route);
}

RoutingOutcome solve_online_milp_exact(const Cluster& cluster, const Placement& placement,
                                       int client, std::span<const ServerState> states,
                                       double now, const RouteDemand& demand,
                                       std::size_t path_budget) {
  require(static_cast<int>(states.size()) == cluster.server_count(), "one state per server");
  const TokenBasis basis = demand.basis();
  const double l_out = demand.output_tokens;
  std::vector<double> wait_of_edge;
  const FeasibleSubgraph graph = feasible_subgraph(
      cluster, placement, client, [&](int, int server, int blocks) {
        return hop_cost(cluster, client, basis, server, blocks);
      });
  for (const SubgraphEdge& e : graph.edges()) {
    wait_of_edge.push_back(
        e.blocks == 0 ? 0.0
                      : waiting_time(states[FeasibleSubgraph::server_of_node(e.to)], now,
                                     demand.units(cluster.model, e.blocks)));
  }
  const SubgraphEdge* base = graph.edges().data();
  double best = kInf;
  RouteAssignment best_route;
  for_each_path(
      graph,
      [&](std::span<const SubgraphEdge* const> path) {
        double w = 0.0;
        double c = 0.0;
        for (const SubgraphEdge* e : path) {
          w = std::max(w, wait_of_edge[e - base]);
          c += e->cost;
        }
        const double objective = w + l_out * c;
        if (objective < best) {
          best = objective;
          best_route = to_route(path);
        }
      },
      path_budget);
  if (std::isinf(best)) throw Error(ErrorCode::kNoFeasiblePath, "every path waits forever");
  return evaluate_route(cluster, placement, client, states, now, demand, best_route);
}

void admit_session(std::span<ServerState> states, const RouteAssignment& route,
                   std::span<const std::int64_t> units, int request, double start, double end) {
  require(units.size() == route.servers.size(), "one unit count per hop");
  for (std::size_t h = 0; h < route.servers.size(); ++h) {
    const Session s{request, start, end, units[h]};
    if (!states[route.servers[h]].fits(s)) {
      throw Error(ErrorCode::kCapacityViolated,
                  "server " + std::to_string(route.servers[h]) + " cannot admit request " +
                      std::to_string(request));
    }
  }
  for (std::size_t h = 0; h < route.servers.size(); ++h) {
    states[route.servers[h]].admit(Session{request, start, end, units[h]});
  }
}

void release_session(std::span<ServerState> states, const RouteAssignment& route, int request) {
  for (int j : route.servers) states[j].release(request);
}

}  // namespace bprr
