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
#include <cstdint>
#include <span>
#include <vector>

#include "bprr/model.hpp"
#include "bprr/topology.hpp"

namespace bprr {

enum class CacheAccounting {
  kSlots,  // capacity floor((M - s_m m) / s_c); a hop of k blocks takes k slots
  kBytes,  // capacity M - s_m m; a hop of k blocks takes k * s_c^r bytes
};

struct Session {
  int request = 0;
  double start = 0.0;
  double end = 0.0;
  std::int64_t units = 0;
};

/// Cache sessions resident on one server, kept sorted by end time.
class ServerState {
 public:
  ServerState() = default;
  explicit ServerState(std::int64_t capacity) : capacity_(capacity) {}

  static ServerState for_server(const Cluster& cluster, const Placement& placement, int server,
                                CacheAccounting accounting);

  std::int64_t capacity() const noexcept { return capacity_; }
  std::span<const Session> sessions() const noexcept { return sessions_; }
  std::size_t size() const noexcept { return sessions_.size(); }

  /// Units held by sessions still running after `at` (reserved ones included).
  std::int64_t units_after(double at) const;
  /// Units held by sessions with start <= at < end.
  std::int64_t units_in_use(double at) const;
  bool fits(const Session& session) const;
  /// Throws kCapacityViolated when the session does not fit.
  void admit(const Session& session);
  bool release(int request);
  /// Drops sessions with end <= now.
  void expire(double now);
  /// Peak concurrent use never exceeds capacity and order is maintained.
  bool invariant_holds() const;

 private:
  std::int64_t capacity_ = 0;
  std::vector<Session> sessions_;
};

/// Earliest delay after `now` at which `needed` units are free, assuming each
/// session releases everything at its end. +inf when needed > capacity.
double waiting_time(const ServerState& state, double now, std::int64_t needed);

/// The instant at which `needed` units are free: `now`, a session end, or +inf.
double release_time(const ServerState& state, double now, std::int64_t needed);

struct RouteDemand {
  int input_tokens = 1;
  int output_tokens = 1;
  CacheAccounting accounting = CacheAccounting::kSlots;
  /// Charge hops the all-token average instead of the decode time.
  bool all_token_cost = true;

  TokenBasis basis() const;
  std::int64_t units(const ModelSpec& model, int blocks) const;
};

struct RoutingOutcome {
  RouteAssignment route;
  std::vector<double> hop_waits;
  std::vector<double> hop_costs;   // per-token cost of each hop
  double wait_time = 0.0;          // max hop wait
  double start_time = 0.0;         // latest hop release instant, never before the decision
  double path_cost = 0.0;          // sum of (wait + l_out * cost)
  double completion_estimate = 0.0;  // max wait + l_out * sum of cost
};

/// Shortest path under the given basis. Throws kNoFeasiblePath.
RouteAssignment offline_route(const Cluster& cluster, const Placement& placement, int client,
                              const TokenBasis& basis = TokenBasis::decode());

/// Waiting-penalized shortest-path routing. Throws kNoFeasiblePath.
RoutingOutcome ws_route(const Cluster& cluster, const Placement& placement, int client,
                        std::span<const ServerState> states, double now,
                        const RouteDemand& demand);

/// Minimizes max wait + l_out * path cost over every feasible path.
/// Throws kBudgetExceeded or kNoFeasiblePath.
RoutingOutcome solve_online_milp_exact(const Cluster& cluster, const Placement& placement,
                                       int client, std::span<const ServerState> states,
                                       double now, const RouteDemand& demand,
                                       std::size_t path_budget = 1'000'000);

/// Fills wait and cost fields for a fixed route.
RoutingOutcome evaluate_route(const Cluster& cluster, const Placement& placement, int client,
                              std::span<const ServerState> states, double now,
                              const RouteDemand& demand, const RouteAssignment& route);

/// Admits one session per hop, all or none. Throws kCapacityViolated.
void admit_session(std::span<ServerState> states, const RouteAssignment& route,
                   std::span<const std::int64_t> units, int request, double start, double end);

void release_session(std::span<ServerState> states, const RouteAssignment& route, int request);

}  // namespace bprr
