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

#include "bprr/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <tuple>

#include "bprr/bounds.hpp"
#include "bprr/error.hpp"
#include "bprr/petals.hpp"

namespace bprr {

const char* to_string(Policy policy) noexcept {
  switch (policy) {
    case Policy::kProposed: return "proposed";
    case Policy::kPetals: return "petals";
    case Policy::kOptimizedOrder: return "optimized-order";
    case Policy::kOptimizedNumber: return "optimized-number";
    case Policy::kOptimizedRR: return "optimized-rr";
  }
  return "unknown";
}

Policy parse_policy(const std::string& name) {
  for (Policy p : all_policies()) {
    if (name == to_string(p)) return p;
  }
  throw Error(ErrorCode::kValidation, "unknown policy '" + name + "'");
}

std::vector<Policy> all_policies() {
  return {Policy::kProposed, Policy::kPetals, Policy::kOptimizedOrder, Policy::kOptimizedNumber,
          Policy::kOptimizedRR};
}

bool SimEvent::operator>(const SimEvent& other) const {
  return std::tie(time, kind, request, sequence) >
         std::tie(other.time, other.kind, other.request, other.sequence);
}

namespace {

std::vector<int> join_order(int servers, std::uint64_t seed) {
  std::vector<int> order(static_cast<std::size_t>(servers));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (int i = servers - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }
  return order;
}

class Simulation {
 public:
  Simulation(const Cluster& cluster, const std::vector<Request>& requests, Policy policy,
             const SimOptions& options, std::uint64_t seed, int target_requests)
      : cluster_(cluster), requests_(requests), policy_(policy), options_(options), seed_(seed),
        target_(target_requests) {}

  SimReport run() {
    report_.policy = policy_;
    report_.seed = seed_;
    report_.target_requests = target_;
    place();
    for (int j = 0; j < cluster_.server_count(); ++j) {
      states_.push_back(ServerState::for_server(cluster_, plan_.placement, j, options_.accounting));
    }
    pending_.resize(requests_.size());
    report_.records.resize(requests_.size());
    for (int r = 0; r < static_cast<int>(requests_.size()); ++r) {
      const Request& q = requests_[r];
      RequestRecord& rec = report_.records[r];
      rec.id = q.id;
      rec.client = q.client;
      rec.arrival = q.arrival;
      rec.input_tokens = q.input_tokens;
      rec.output_tokens = q.output_tokens;
      push(q.arrival, EventKind::kArrival, r);
    }
    while (!queue_.empty()) {
      const SimEvent ev = queue_.top();
      queue_.pop();
      ++report_.events;
      switch (ev.kind) {
        case EventKind::kArrival: decide(ev.request, ev.time); break;
        case EventKind::kSessionStart:
        case EventKind::kRetryWake: start(ev.request, ev.time); break;
        case EventKind::kSessionEnd: finish(ev.request, ev.time); break;
      }
      if (options_.check_invariants) check(ev.time);
    }
    summarize_records();
    return std::move(report_);
  }

 private:
  struct Pending {
    RouteAssignment route;
    std::vector<std::int64_t> units;
    double duration = 0.0;
    double first_token = 0.0;
    double origin = -1.0;  // first decision time, anchors the backoff schedule
    bool admitted = false;
  };

  void push(double time, EventKind kind, int request) {
    queue_.push(SimEvent{time, kind, request, sequence_++});
  }

  void place() {
    plan_ = policy_placement(cluster_, policy_, options_, seed_, target_);
    if (policy_ == Policy::kProposed) report_.upper_bound = cg_upper_bound(cluster_, plan_);
    report_.placement = plan_.placement;
    report_.placement_feasible = plan_.feasible;
  }

  RouteDemand demand(const Request& q) const {
    return RouteDemand{q.input_tokens, q.output_tokens, options_.accounting,
                       options_.all_token_cost};
  }

  RoutingOutcome route(const Request& q, double now) {
    const RouteDemand d = demand(q);
    switch (policy_) {
      case Policy::kProposed:
        return ws_route(cluster_, plan_.placement, q.client, states_, now, d);
      case Policy::kOptimizedRR:
        return solve_online_milp_exact(cluster_, plan_.placement, q.client, states_, now, d,
                                       options_.exact_path_budget);
      default: {
        const RouteAssignment chain = petals_route(cluster_, plan_.placement, q.client, states_);
        RoutingOutcome out = evaluate_route(cluster_, plan_.placement, q.client, states_, now, d, chain);
        if (std::isinf(out.wait_time)) {
          throw Error(ErrorCode::kNeverAvailable, "chosen chain can never hold the session");
        }
        return out;
      }
    }
  }

  const RouteAssignment& zero_load_route(const Request& q) {
    const auto key = std::make_tuple(q.client, q.input_tokens, q.output_tokens);
    auto it = offline_.find(key);
    if (it == offline_.end()) {
      it = offline_.emplace(key, offline_route(cluster_, plan_.placement, q.client,
                                               demand(q).basis())).first;
    }
    return it->second;
  }

  double start_time(const Pending& p, double now, double release) const {
    if (!options_.retry_backoff || release <= now) return release;
    double instant = p.origin;
    double step = 1.0;
    while (instant < release) {
      instant += std::min(step, options_.max_backoff);
      step *= 2.0;
    }
    return instant;
  }

  void decide(int r, double now) {
    const Request& q = requests_[r];
    RequestRecord& rec = report_.records[r];
    Pending& p = pending_[r];
    if (p.origin < 0.0) p.origin = now;

    RoutingOutcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      out = route(q, now);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoFeasiblePath && e.code() != ErrorCode::kNeverAvailable) throw;
      report_.decision_seconds +=
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rec.dropped = true;
      return;
    }
    report_.decision_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    rec.route = out.route;
    rec.path_cost = out.path_cost;
    rec.completion_estimate = out.completion_estimate;
    rec.concurrent = static_cast<int>(holding_.size()) + 1;
    rec.offline_route = out.route == zero_load_route(q);

    p.route = out.route;
    p.units.clear();
    for (int k : out.route.blocks) p.units.push_back(demand(q).units(cluster_.model, k));
    p.duration = total_request_time(cluster_, plan_.placement, q.client, out.route.servers,
                                    q.input_tokens, q.output_tokens);
    p.first_token =
        first_token_time(cluster_, plan_.placement, q.client, out.route.servers, q.input_tokens);

    const double begin = start_time(p, now, out.start_time);
    if (options_.reserve) {
      admit(r, begin);
      push(begin, EventKind::kSessionStart, r);
    } else {
      push(begin, options_.retry_backoff ? EventKind::kRetryWake : EventKind::kSessionStart, r);
    }
  }

  void admit(int r, double begin) {
    Pending& p = pending_[r];
    try {
      admit_session(states_, p.route, p.units, r, begin, begin + p.duration);
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvariantViolated,
                  std::string("admission at the computed start failed: ") + e.what());
    }
    p.admitted = true;
    holding_.insert(r);
    RequestRecord& rec = report_.records[r];
    rec.wait = begin - requests_[r].arrival;
    rec.ttft = rec.wait + p.first_token;
    rec.total = rec.wait + p.duration;
    push(begin + p.duration, EventKind::kSessionEnd, r);
  }

  void start(int r, double now) {
    Pending& p = pending_[r];
    if (p.admitted) return;
    bool fits = true;
    for (std::size_t h = 0; h < p.route.servers.size() && fits; ++h) {
      fits = states_[p.route.servers[h]].fits(Session{r, now, now + p.duration, p.units[h]});
    }
    if (fits) {
      admit(r, now);
      return;
    }
    ++report_.records[r].reroutes;
    decide(r, now);
  }

  void finish(int r, double) {
    release_session(states_, pending_[r].route, r);
    holding_.erase(r);
    ++completed_;
  }

  void check(double now) const {
    for (int j = 0; j < static_cast<int>(states_.size()); ++j) {
      if (!states_[j].invariant_holds() || states_[j].units_in_use(now) > states_[j].capacity()) {
        throw Error(ErrorCode::kInvariantViolated,
                    "server " + std::to_string(j) + " over capacity at t=" + std::to_string(now));
      }
    }
  }

  void summarize_records() {
    SimSummary& s = report_.summary;
    s.requests = static_cast<int>(requests_.size());
    double total = 0.0, ttft = 0.0, remaining = 0.0, wait = 0.0;
    double tokens = 0.0, decode_tokens = 0.0;
    for (const RequestRecord& rec : report_.records) {
      if (rec.dropped) {
        ++s.dropped;
        continue;
      }
      total += rec.total;
      ttft += rec.ttft;
      wait += rec.wait;
      remaining += rec.total - rec.ttft;
      tokens += rec.output_tokens;
      decode_tokens += rec.output_tokens - 1;
      s.max_concurrent = std::max(s.max_concurrent, rec.concurrent);
    }
    s.completed = completed_;
    if (s.completed + s.dropped != s.requests) {
      throw Error(ErrorCode::kInvariantViolated, "requests neither completed nor dropped");
    }
    if (s.completed > 0) {
      s.avg_per_token = total / tokens;
      s.avg_ttft = ttft / s.completed;
      s.avg_wait = wait / s.completed;
      s.avg_per_remaining = decode_tokens > 0 ? remaining / decode_tokens : 0.0;
    }
  }

  const Cluster& cluster_;
  const std::vector<Request>& requests_;
  Policy policy_;
  const SimOptions& options_;
  std::uint64_t seed_;
  int target_;

  PlacementPlan plan_;
  std::vector<ServerState> states_;
  std::vector<Pending> pending_;
  std::set<int> holding_;
  std::map<std::tuple<int, int, int>, RouteAssignment> offline_;
  std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<>> queue_;
  std::uint64_t sequence_ = 0;
  int completed_ = 0;
  SimReport report_;
};

struct ResolvedLengths {
  int input;
  int output;
};

ResolvedLengths longest(const Cluster& cluster, const WorkloadSpec& workload) {
  const LengthModel& l = workload.lengths;
  return {l.input_max == 0 ? cluster.model.max_input_tokens : l.input_max,
          l.output_max == 0 ? cluster.model.max_output_tokens : l.output_max};
}

}  // namespace

TokenBasis placement_basis(const Cluster& cluster, const SimOptions& options) {
  if (!options.all_token_cost) return TokenBasis::decode();
  return TokenBasis::all_tokens(cluster.model.max_input_tokens, cluster.model.max_output_tokens);
}

PlacementPlan policy_placement(const Cluster& cluster, Policy policy, const SimOptions& options,
                               std::uint64_t seed, int target_requests) {
  const TokenBasis basis = placement_basis(cluster, options);
  const int n = cluster.server_count();
  switch (policy) {
    case Policy::kProposed:
      return cg_block_placement(cluster, target_requests, basis);
    case Policy::kPetals:
    case Policy::kOptimizedRR:
      return petals_place(cluster, join_order(n, seed), options.petals_cache_sessions, basis);
    case Policy::kOptimizedOrder:
      return optimized_order_place(cluster, options.petals_cache_sessions, basis);
    case Policy::kOptimizedNumber:
      return optimized_number_place(cluster, join_order(n, seed), target_requests, basis);
  }
  throw Error(ErrorCode::kContract, "unknown policy");
}

double estimate_session_duration(const Cluster& cluster, const WorkloadSpec& workload,
                                 const SimOptions& options) {
  const TokenBasis basis = placement_basis(cluster, options);
  const PlacementPlan plan = cg_block_placement(cluster, 1, basis);
  const int client = workload.clients.empty() ? 0 : workload.clients.front();
  const RouteAssignment route = offline_route(cluster, plan.placement, client, basis);
  const ResolvedLengths len = longest(cluster, workload);
  return total_request_time(cluster, plan.placement, client, route.servers, len.input, len.output);
}

int resolve_target_requests(const Cluster& cluster, const WorkloadSpec& workload,
                            const SimOptions& options) {
  if (options.target_requests) {
    require(*options.target_requests >= 1, "target request count must be >= 1");
    return *options.target_requests;
  }
  double rate = workload.rate;
  if (!workload.trace.empty()) {
    const double span = *std::max_element(workload.trace.begin(), workload.trace.end());
    rate = span > 0.0 ? static_cast<double>(workload.trace.size()) / span : 0.0;
  }
  return tune_target_requests(rate, estimate_session_duration(cluster, workload, options), cluster);
}

SimReport simulate(const Cluster& cluster, const std::vector<Request>& requests, Policy policy,
                   const SimOptions& options, std::uint64_t seed, int target_requests) {
  require(target_requests >= 1, "target request count must be >= 1");
  return Simulation(cluster, requests, policy, options, seed, target_requests).run();
}

SimReport run_simulation(const Cluster& cluster, const WorkloadSpec& workload, Policy policy,
                         const SimOptions& options, std::uint64_t seed) {
  const int R = resolve_target_requests(cluster, workload, options);
  const std::vector<Request> requests = generate_requests(cluster, workload, seed);
  return simulate(cluster, requests, policy, options, seed, R);
}

MetricStats summarize(const std::vector<double>& values) {
  MetricStats s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / (n - 1.0));
  }
  return s;
}

MonteCarloReport run_monte_carlo(const Cluster& cluster, const WorkloadSpec& workload,
                                 Policy policy, const SimOptions& options, int runs,
                                 std::uint64_t seed, Execution execution) {
  require(runs >= 1, "Monte Carlo needs at least one run");
  cluster.validate();
  workload.validate(cluster.model, cluster.client_count());
  const int R = resolve_target_requests(cluster, workload, options);

  MonteCarloReport mc;
  mc.policy = policy;
  mc.runs = runs;
  mc.seed = seed;
  mc.target_requests = R;
  mc.reports.resize(static_cast<std::size_t>(runs));

  auto replica = [&](int i) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    const std::vector<Request> requests = generate_requests(cluster, workload, s);
    mc.reports[i] = simulate(cluster, requests, policy, options, s, R);
  };
  if (execution == Execution::kSerial) {
    for (int i = 0; i < runs; ++i) replica(i);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(runs));
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < runs; ++i) {
      try {
        replica(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<double> per_token, ttft, remaining, wait, dropped;
  for (const SimReport& r : mc.reports) {
    per_token.push_back(r.summary.avg_per_token);
    ttft.push_back(r.summary.avg_ttft);
    remaining.push_back(r.summary.avg_per_remaining);
    wait.push_back(r.summary.avg_wait);
    dropped.push_back(r.summary.dropped);
    mc.decision_seconds += r.decision_seconds;
  }
  mc.avg_per_token = summarize(per_token);
  mc.avg_ttft = summarize(ttft);
  mc.avg_per_remaining = summarize(remaining);
  mc.avg_wait = summarize(wait);
  mc.dropped = summarize(dropped);
  return mc;
}

}  // namespace bprr
