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

// Serial reference vs OpenMP kernels. The second argument selects the path:
// 0 serial, 1 parallel.

#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "bprr/exact.hpp"
#include "bprr/execution.hpp"
#include "bprr/scenario.hpp"
#include "bprr/simulator.hpp"
#include "bprr/topology_file.hpp"
#include "fixtures.hpp"

namespace {

bprr::Execution mode(const benchmark::State& state) {
  return state.range(1) == 0 ? bprr::Execution::kSerial : bprr::Execution::kParallel;
}

void BM_MonteCarlo(benchmark::State& state) {
  const bprr::Scenario base =
      bprr::load_scenario(std::string(BPRR_DATA_DIR) + "/presets/clustered.json");
  const bprr::Scenario s = bprr::sweep_cell(base, 0.5, 128);
  const int runs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(bprr::run_monte_carlo(s.cluster, s.workload, bprr::Policy::kProposed,
                                                   s.options, runs, 1, mode(state)));
  }
  state.SetItemsProcessed(state.iterations() * runs);
}
BENCHMARK(BM_MonteCarlo)->ArgsProduct({{20}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_ExactSolver(benchmark::State& state) {
  std::mt19937_64 rng(9);
  bprr::Cluster c = fixture::uniform(5, 4, 2, 1, 14, 0.1, 0.02, 2);
  c.clients[1].rtt = {0.3, 0.05, 0.2, 0.1};
  c.servers[2].memory = 9;
  const auto reqs = fixture::requests(static_cast<int>(state.range(0)), 2);
  bprr::ExactOptions options;
  options.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(bprr::solve_exact(c, reqs, options));
}
BENCHMARK(BM_ExactSolver)->ArgsProduct({{3}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_AllPairsDelay(benchmark::State& state) {
  const bprr::Topology t =
      bprr::load_topology(std::string(BPRR_DATA_DIR) + "/topologies/gts-ce.json");
  for (auto _ : state) benchmark::DoNotOptimize(bprr::all_pairs_delay(t, mode(state)));
}
BENCHMARK(BM_AllPairsDelay)->ArgsProduct({{149}, {0, 1}})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
