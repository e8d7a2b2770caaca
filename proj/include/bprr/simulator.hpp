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
#include <optional>
#include <string>
#include <vector>

#include "bprr/execution.hpp"
#include "bprr/model.hpp"
#include "bprr/placement.hpp"
#include "bprr/routing.hpp"
#include "bprr/workload.hpp"

namespace bprr {

enum class Policy {
  kProposed,         // conservative greedy placement, waiting-penalized routing
  kPetals,           // baseline placement in random join order, load-blind routing
  kOptimizedOrder,   // baseline placement in amortized-time order
  kOptimizedNumber,  // baseline placement with conservative block counts
  kOptimizedRR,      // baseline placement, exact myopic routing
};

const char* to_string(Policy policy) noexcept;
/// Throws kValidation for unknown names.
Policy parse_policy(const std::string& name);
std::vector<Policy> all_policies();

struct SimOptions {
  std::optional<int> target_requests;  // R; tuned from the workload when absent
  CacheAccounting accounting = CacheAccounting::kSlots;
  /// Hold cache from the routing decision onward. When false, the start is
  /// re-checked and a stale decision re-routes.
  bool reserve = true;
  /// Blocked starts wake on a 1, 2, 4, ... second schedule instead of exactly.
  bool retry_backoff = false;
  double max_backoff = 60.0;
  int petals_cache_sessions = 1;
  bool check_invariants = false;
  std::size_t exact_path_budget = 1'000'000;
  /// Charge hops the all-token average rather than the decode time.
  bool all_token_cost = true;
};

enum class EventKind { kSessionEnd = 0, kRetryWake = 1, kArrival = 2, kSessionStart = 3 };

struct SimEvent {
  double time = 0.0;
  EventKind kind = EventKind::kArrival;
  int request = 0;
  std::uint64_t sequence = 0;

  /// Pops in (time, kind, request, sequence) order.
  bool operator>(const SimEvent& other) const;
};

struct RequestRecord {
  std::string id;
  int client = 0;
  double arrival = 0.0;
  int input_tokens = 0;
  int output_tokens = 0;
  bool dropped = false;
  double wait = 0.0;        // arrival to session start
  double ttft = 0.0;        // arrival to first token
  double total = 0.0;       // arrival to last token
  RouteAssignment route;
  double path_cost = 0.0;
  double completion_estimate = 0.0;
  int concurrent = 0;       // sessions holding cache at decision, this one included
  bool offline_route = false;  // chain equals the zero-load shortest path
  int reroutes = 0;
};

struct SimSummary {
  int requests = 0;
  int completed = 0;
  int dropped = 0;
  double avg_per_token = 0.0;      // sum of totals / sum of output tokens
  double avg_ttft = 0.0;
  double avg_per_remaining = 0.0;  // decode tokens only
  double avg_wait = 0.0;
  int max_concurrent = 0;
};

struct SimReport {
  Policy policy = Policy::kProposed;
  std::uint64_t seed = 0;
  int target_requests = 0;
  Placement placement;
  bool placement_feasible = false;
  double upper_bound = 0.0;  // per-token bound of the greedy plan, 0 for other policies
  std::vector<RequestRecord> records;
  SimSummary summary;
  std::int64_t events = 0;
  double decision_seconds = 0.0;  // wall clock spent routing, not simulated time
};

/// Zero-load duration of one session at the longest lengths, used to size R.
/// All-token basis at the model's maximum lengths, or the decode basis.
TokenBasis placement_basis(const Cluster& cluster, const SimOptions& options);

/// The placement `policy` starts from. Baseline join orders are shuffled by `seed`.
PlacementPlan policy_placement(const Cluster& cluster, Policy policy, const SimOptions& options,
                               std::uint64_t seed, int target_requests);

double estimate_session_duration(const Cluster& cluster, const WorkloadSpec& workload,
                                 const SimOptions& options);

/// R for a workload: the explicit option, or the tuned value.
int resolve_target_requests(const Cluster& cluster, const WorkloadSpec& workload,
                            const SimOptions& options);

SimReport simulate(const Cluster& cluster, const std::vector<Request>& requests, Policy policy,
                   const SimOptions& options, std::uint64_t seed, int target_requests);

/// Generates the workload for `seed` and simulates it.
SimReport run_simulation(const Cluster& cluster, const WorkloadSpec& workload, Policy policy,
                         const SimOptions& options, std::uint64_t seed);

struct MetricStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single run
};

struct MonteCarloReport {
  Policy policy = Policy::kProposed;
  int runs = 0;
  std::uint64_t seed = 0;
  int target_requests = 0;
  MetricStats avg_per_token;
  MetricStats avg_ttft;
  MetricStats avg_per_remaining;
  MetricStats avg_wait;
  MetricStats dropped;
  double decision_seconds = 0.0;
  std::vector<SimReport> reports;  // by run index
};

MetricStats summarize(const std::vector<double>& values);

/// Runs seeds seed, seed + 1, ..., seed + runs - 1. Replicas are independent;
/// the parallel path reduces in run order, matching the serial path exactly.
MonteCarloReport run_monte_carlo(const Cluster& cluster, const WorkloadSpec& workload,
                                 Policy policy, const SimOptions& options, int runs,
                                 std::uint64_t seed, Execution execution = Execution::kParallel);

}  // namespace bprr
