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

#include <random>
#include <sstream>
#include <vector>

#include "bprr/bounds.hpp"
#include "bprr/exact.hpp"
#include "bprr/milp.hpp"
#include "bprr/placement.hpp"
#include "expect_error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace {

bprr::ExactOptions wide_limits(int requests) {
  bprr::ExactOptions o;
  o.limits.max_requests = requests;
  return o;
}

TEST(SolveExact, PartitionReductionEven) {
  const std::vector<int> w{2, 4, 6};
  const bprr::Cluster c = fixture::partition_reduction(w);
  const bprr::ExactSolution sol = bprr::solve_exact(c, fixture::requests(6), wide_limits(6));
  EXPECT_DOUBLE_EQ(sol.objective, 12.0);
  EXPECT_EQ(sol.objective, oracle::partition_objective(w));
}

TEST(SolveExact, PartitionReductionOdd) {
  const std::vector<int> w{4, 4, 6};
  const bprr::Cluster c = fixture::partition_reduction(w);
  const bprr::ExactSolution sol = bprr::solve_exact(c, fixture::requests(7), wide_limits(7));
  EXPECT_DOUBLE_EQ(sol.objective, 15.0);
  EXPECT_EQ(sol.objective, oracle::partition_objective(w));
}

TEST(SolveExact, SuboptimalityTruncation) {
  const double t = 0.4, tau = 0.05;
  const bprr::Cluster c = fixture::suboptimal_greedy(t, tau, 4);
  const auto reqs = fixture::requests(4);
  const bprr::ExactSolution sol = bprr::solve_exact(c, reqs);
  EXPECT_NEAR(sol.average(reqs.size()), t + tau * 3, 1e-12);
  for (const auto& r : sol.routes) EXPECT_EQ(r.servers.size(), 1u);
}

TEST(SolveExact, SerialAndParallelAgree) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const bprr::Cluster c = fixture::random_tiny(rng, 4, 3, 2);
    const auto reqs = fixture::requests(1 + static_cast<int>(rng() % 3), c.client_count());
    bprr::ExactOptions serial;
    serial.execution = bprr::Execution::kSerial;
    bprr::ExactOptions parallel;
    try {
      const bprr::ExactSolution a = bprr::solve_exact(c, reqs, serial);
      const bprr::ExactSolution b = bprr::solve_exact(c, reqs, parallel);
      EXPECT_EQ(a.objective, b.objective);
      EXPECT_EQ(a.placement, b.placement);
      EXPECT_EQ(a.routes, b.routes);
    } catch (const bprr::Error& e) {
      EXPECT_EQ(e.code(), bprr::ErrorCode::kInfeasible);
    }
  }
}

TEST(SolveExact, RoutesAreFeasibleAndPriced) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 60; ++trial) {
    const bprr::Cluster c = fixture::random_tiny(rng, 4, 3, 2);
    const auto reqs = fixture::requests(1 + static_cast<int>(rng() % 3), c.client_count());
    bprr::ExactSolution sol;
    try {
      sol = bprr::solve_exact(c, reqs);
    } catch (const bprr::Error&) {
      continue;
    }
    double total = 0.0;
    for (std::size_t r = 0; r < reqs.size(); ++r) {
      ASSERT_FALSE(oracle::walk(sol.placement, c.model.blocks, sol.routes[r].servers).empty());
      total += oracle::chain_cost(c, sol.placement, reqs[r].client, sol.routes[r].servers, 0, 0);
    }
    EXPECT_NEAR(total, sol.objective, 1e-9);
  }
}

TEST(SolveExact, Limits) {
  const bprr::Cluster big = fixture::uniform(6, 2, 1, 1, 99, 0.1, 0.1);
  expect_code(bprr::ErrorCode::kBudgetExceeded, [&] { bprr::solve_exact(big, fixture::requests(1)); });
  const bprr::Cluster wide = fixture::uniform(2, 5, 1, 1, 99, 0.1, 0.1);
  expect_code(bprr::ErrorCode::kBudgetExceeded, [&] { bprr::solve_exact(wide, fixture::requests(1)); });
  const bprr::Cluster ok = fixture::uniform(2, 2, 1, 1, 99, 0.1, 0.1);
  expect_code(bprr::ErrorCode::kBudgetExceeded, [&] { bprr::solve_exact(ok, fixture::requests(6)); });
}

TEST(SolveExact, MemoryTooSmallIsInfeasible) {
  const bprr::Cluster c = fixture::uniform(2, 1, 3, 1, 4, 0.1, 0.1);
  expect_code(bprr::ErrorCode::kInfeasible, [&] { bprr::solve_exact(c, fixture::requests(1)); });
}

bprr::MilpCounts analytic_counts(int clients, int servers, int requests) {
  bprr::MilpCounts k;
  k.nodes = 2 * clients + servers;
  k.edges = clients * servers + servers * (servers - 1) + servers * clients;
  k.binaries = requests * k.edges;
  k.integers = 2 * servers;
  k.auxiliaries = 4 * requests * k.edges;
  k.memory_rows = servers;
  k.flow_rows = requests * k.nodes;
  k.placement_rows = servers;
  k.feasibility_rows = 2 * requests * k.edges;
  k.linearization_rows = 12 * requests * k.edges;
  return k;
}

TEST(EmitMilp, CountsMatchAnalyticFormula) {
  for (int n = 1; n <= 3; ++n) {
    for (int clients = 1; clients <= 2; ++clients) {
      for (int r = 0; r <= 3; ++r) {
        const bprr::Cluster c = fixture::uniform(3, n, 1, 1, 99, 0.1, 0.1, clients);
        const auto reqs = fixture::requests(r, clients);
        EXPECT_EQ(bprr::expected_milp_counts(c, reqs), analytic_counts(clients, n, r));
        std::stringstream lp;
        bprr::emit_milp(c, reqs, lp);
        bprr::MilpCounts expect = analytic_counts(clients, n, r);
        if (r == 0) expect.nodes = expect.edges = 0;  // not recoverable without routing variables
        EXPECT_EQ(bprr::parse_lp(lp).counts(), expect);
      }
    }
  }
}

TEST(EmitMilp, ExactOptimumIsFeasibleWithSameObjective) {
  std::mt19937_64 rng(21);
  int checked = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const bprr::Cluster c = fixture::random_tiny(rng, 3, 3, 2);
    const auto reqs = fixture::requests(1 + static_cast<int>(rng() % 3), c.client_count());
    bprr::ExactSolution sol;
    try {
      sol = bprr::solve_exact(c, reqs);
    } catch (const bprr::Error&) {
      continue;
    }
    std::stringstream lp;
    bprr::emit_milp(c, reqs, lp);
    const bprr::LpModel model = bprr::parse_lp(lp);
    const auto values = bprr::milp_assignment(c, reqs, sol.placement, sol.routes);
    EXPECT_TRUE(model.violations(values).empty()) << model.violations(values).front();
    EXPECT_NEAR(model.objective_value(values), sol.objective, 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(ParseLp, SingleTokenContinuationLines) {
  std::stringstream lp("Minimize\n obj: 2 x\n + y\n y\nSubject To\n c1: x + y\n >= 1\nEnd\n");
  const bprr::LpModel m = bprr::parse_lp(lp);
  EXPECT_EQ(m.objective.at("y"), 2.0);
  EXPECT_EQ(m.rows.size(), 1u);
}

TEST(ParseLp, RejectsGarbage) {
  std::stringstream bad("Minimize\n obj: x +\nSubject To\n c1: x >= \nEnd\n");
  expect_code(bprr::ErrorCode::kValidation, [&] { bprr::parse_lp(bad); });
}

TEST(Bounds, SuboptimalityInstance) {
  const double t = 0.4, tau = 0.05;
  const bprr::Cluster c = fixture::suboptimal_greedy(t, tau);
  const bprr::PlacementPlan plan = bprr::cg_block_placement(c, 9);
  const auto reqs = fixture::requests(9);
  EXPECT_NEAR(bprr::realized_average(c, plan, reqs), 3 * (t + tau), 1e-12);
  EXPECT_NEAR(bprr::lower_bound(c, 0), t + 3 * tau, 1e-12);
  EXPECT_NEAR(bprr::cg_upper_bound(c, plan), 3 * (t + tau), 1e-12);
  EXPECT_NEAR(bprr::approximation_ratio(c, plan, reqs), 3 * (t + tau) / (t + 3 * tau), 1e-12);
}

TEST(Bounds, SandwichOnRandomInstances) {
  std::mt19937_64 rng(31);
  int checked = 0;
  for (int trial = 0; trial < 400 && checked < 60; ++trial) {
    const bprr::Cluster c = fixture::random_tiny(rng, 4, 3, 2);
    const auto reqs = fixture::requests(1 + static_cast<int>(rng() % 3), c.client_count());
    const int R = static_cast<int>(reqs.size());
    if (!bprr::cg_feasibility(c, R)) continue;
    const bprr::PlacementPlan plan = bprr::cg_block_placement(c, R);
    const double lower = bprr::weighted_lower_bound(c, reqs);
    const double exact = bprr::solve_exact(c, reqs).average(reqs.size());
    const double greedy = bprr::realized_average(c, plan, reqs);
    const double upper = bprr::cg_upper_bound(c, plan);
    EXPECT_LE(lower, exact * (1 + 1e-12));
    EXPECT_LE(exact, greedy * (1 + 1e-12));
    EXPECT_LE(greedy, upper * (1 + 1e-12));
    ++checked;
  }
  EXPECT_GE(checked, 60);
}

}  // namespace
