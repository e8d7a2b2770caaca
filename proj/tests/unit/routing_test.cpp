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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bprr/placement.hpp"
#include "bprr/routing.hpp"
#include "expect_error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace {

using bprr::ServerState;
using bprr::Session;

ServerState random_state(std::mt19937_64& rng, int max_sessions, double now) {
  const std::int64_t capacity = 1 + static_cast<std::int64_t>(rng() % 12);
  ServerState st(capacity);
  const int n = static_cast<int>(rng() % (max_sessions + 1));
  for (int i = 0; i < n; ++i) {
    Session s{i, now - 1.0, now + static_cast<double>(rng() % 8) * 0.5,
              1 + static_cast<std::int64_t>(rng() % 3)};
    if (st.fits(s)) st.admit(s);
  }
  return st;
}

TEST(WaitingTime, MatchesCompletionOrderOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20000; ++trial) {
    const double now = 10.0;
    const ServerState st = random_state(rng, 6, now);
    const std::int64_t needed = 1 + static_cast<std::int64_t>(rng() % 14);
    const std::vector<Session> sessions(st.sessions().begin(), st.sessions().end());
    const double expect = oracle::completion_order_wait(sessions, st.capacity(), now, needed);
    const double got = bprr::waiting_time(st, now, needed);
    if (std::isinf(expect)) {
      EXPECT_TRUE(std::isinf(got));
    } else {
      EXPECT_DOUBLE_EQ(got, expect);
    }
  }
}

TEST(WaitingTime, Examples) {
  ServerState st(4);
  EXPECT_EQ(bprr::waiting_time(st, 0.0, 4), 0.0);
  EXPECT_TRUE(std::isinf(bprr::waiting_time(st, 0.0, 5)));
  st.admit({0, 0.0, 3.0, 2});
  st.admit({1, 0.0, 5.0, 2});
  EXPECT_EQ(bprr::waiting_time(st, 1.0, 2), 2.0);
  EXPECT_EQ(bprr::waiting_time(st, 1.0, 3), 4.0);
  EXPECT_EQ(bprr::release_time(st, 1.0, 3), 5.0);
  expect_code(bprr::ErrorCode::kContract, [&] { bprr::waiting_time(st, 0.0, 0); });
}

TEST(ServerState, AdmitReleaseExpire) {
  ServerState st(3);
  st.admit({0, 0.0, 4.0, 2});
  expect_code(bprr::ErrorCode::kCapacityViolated, [&] { st.admit({1, 1.0, 2.0, 2}); });
  EXPECT_TRUE(st.fits({1, 4.0, 6.0, 3}));
  st.admit({1, 4.0, 6.0, 1});
  EXPECT_TRUE(st.invariant_holds());
  EXPECT_EQ(st.units_in_use(5.0), 1);
  EXPECT_EQ(st.units_after(2.0), 3);
  st.expire(4.0);
  EXPECT_EQ(st.size(), 1u);
  EXPECT_TRUE(st.release(1));
  EXPECT_FALSE(st.release(1));
}

TEST(ServerState, SlotCapacityFromPlacement) {
  const bprr::Cluster c = fixture::suboptimal_greedy(0.1, 0.1);
  const bprr::Placement p{std::vector<bprr::BlockSpan>(9, {1, 1})};
  EXPECT_EQ(ServerState::for_server(c, p, 0, bprr::CacheAccounting::kSlots).capacity(), 9);
  EXPECT_EQ(ServerState::for_server(c, p, 0, bprr::CacheAccounting::kBytes).capacity(), 9);
}

TEST(AdmitSession, AllOrNothing) {
  std::vector<ServerState> states{ServerState(2), ServerState(1)};
  const bprr::RouteAssignment route{{0, 1}, {1, 2}};
  const std::vector<std::int64_t> units{1, 2};
  expect_code(bprr::ErrorCode::kCapacityViolated,
              [&] { bprr::admit_session(states, route, units, 0, 0.0, 1.0); });
  EXPECT_EQ(states[0].size(), 0u);
  const std::vector<std::int64_t> fit{1, 1};
  bprr::admit_session(states, route, fit, 0, 0.0, 1.0);
  EXPECT_EQ(states[0].size() + states[1].size(), 2u);
  bprr::release_session(states, route, 0);
  EXPECT_EQ(states[0].size() + states[1].size(), 0u);
}

struct Instance {
  bprr::Cluster cluster;
  bprr::Placement placement;
  std::vector<ServerState> states;
};

Instance random_loaded(std::mt19937_64& rng) {
  for (;;) {
    Instance in;
    in.cluster = fixture::random_tiny(rng, 4, 4, 1);
    const int R = 1 + static_cast<int>(rng() % 2);
    if (!bprr::cg_feasibility(in.cluster, R)) continue;
    in.placement = bprr::cg_block_placement(in.cluster, R).placement;
    for (int j = 0; j < in.cluster.server_count(); ++j) {
      ServerState st = ServerState::for_server(in.cluster, in.placement, j, bprr::CacheAccounting::kSlots);
      const int n = static_cast<int>(rng() % 4);
      for (int i = 0; i < n; ++i) {
        Session s{100 + i, 0.0, static_cast<double>(rng() % 20) * 0.25,
                  1 + static_cast<std::int64_t>(rng() % 3)};
        if (st.fits(s)) st.admit(s);
      }
      in.states.push_back(st);
    }
    return in;
  }
}

TEST(WsRoute, ZeroLoadEqualsOfflineRoute) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    Instance in = random_loaded(rng);
    std::vector<ServerState> idle;
    for (const auto& st : in.states) idle.emplace_back(st.capacity());
    const bprr::RouteDemand demand{3, 5, bprr::CacheAccounting::kSlots, true};
    const bprr::RoutingOutcome out = bprr::ws_route(in.cluster, in.placement, 0, idle, 0.0, demand);
    EXPECT_EQ(out.route, bprr::offline_route(in.cluster, in.placement, 0, demand.basis()));
    EXPECT_EQ(out.wait_time, 0.0);
    EXPECT_NEAR(out.path_cost, 5 * oracle::best_chain_cost(in.cluster, in.placement, 0, 3, 5), 1e-9);
  }
}

TEST(WsRoute, PathCostIsSumOfWaitsAndCosts) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    Instance in = random_loaded(rng);
    const bprr::RouteDemand demand{2, 4, bprr::CacheAccounting::kSlots, true};
    bprr::RoutingOutcome out;
    try {
      out = bprr::ws_route(in.cluster, in.placement, 0, in.states, 0.0, demand);
    } catch (const bprr::Error& e) {
      EXPECT_EQ(e.code(), bprr::ErrorCode::kNoFeasiblePath);
      continue;
    }
    double sum = 0.0;
    double max_wait = 0.0;
    double cost = 0.0;
    const std::vector<int> k = oracle::walk(in.placement, in.cluster.model.blocks, out.route.servers);
    for (std::size_t h = 0; h < k.size(); ++h) {
      const auto& st = in.states[out.route.servers[h]];
      const std::vector<Session> ss(st.sessions().begin(), st.sessions().end());
      const double w = oracle::completion_order_wait(ss, st.capacity(), 0.0, k[h]);
      sum += w;
      max_wait = std::max(max_wait, w);
      cost += oracle::hop_cost(in.cluster, 0, out.route.servers[h], k[h], 2, 4);
    }
    EXPECT_NEAR(out.path_cost, sum + 4 * cost, 1e-9);
    EXPECT_NEAR(out.completion_estimate, max_wait + 4 * cost, 1e-9);
    EXPECT_LE(out.completion_estimate, out.path_cost + 1e-12);
  }
}

TEST(OnlineExact, MatchesThresholdOracle) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    Instance in = random_loaded(rng);
    const bprr::RouteDemand demand{2, 4, bprr::CacheAccounting::kSlots, true};
    const double expect = oracle::best_online_objective(in.cluster, in.placement, 0, in.states, 0.0, 2, 4);
    if (std::isinf(expect)) {
      expect_code(bprr::ErrorCode::kNoFeasiblePath, [&] {
        bprr::solve_online_milp_exact(in.cluster, in.placement, 0, in.states, 0.0, demand);
      });
      continue;
    }
    const bprr::RoutingOutcome out =
        bprr::solve_online_milp_exact(in.cluster, in.placement, 0, in.states, 0.0, demand);
    EXPECT_NEAR(out.completion_estimate, expect, 1e-9);
  }
}

TEST(OfflineRoute, NoPathIsError) {
  const bprr::Cluster c = fixture::uniform(3, 1, 1, 1, 99, 0.1, 0.1);
  const bprr::Placement p{{{1, 2}}};
  expect_code(bprr::ErrorCode::kNoFeasiblePath, [&] { bprr::offline_route(c, p, 0); });
}

}  // namespace
