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

#include "bprr/workload.hpp"

#include <algorithm>
#include <random>

#include "bprr/error.hpp"

namespace bprr {

namespace {

struct Range {
  int lo;
  int hi;
};

Range resolve(int lo, int hi, int max) {
  return {lo == 0 ? max : lo, hi == 0 ? max : hi};
}

}  // namespace

void WorkloadSpec::validate(const ModelSpec& model, int client_count) const {
  auto invalid = [](const std::string& m) { throw Error(ErrorCode::kValidation, m); };
  if (trace.empty()) {
    if (!(rate > 0.0)) invalid("workload.rate must be positive");
    if (count < 1) invalid("workload.count must be >= 1");
  }
  for (double t : trace) {
    if (!(t >= 0.0)) invalid("workload.trace entries must be non-negative");
  }
  for (int c : clients) {
    if (c < 0 || c >= client_count) invalid("workload.clients names an unknown client");
  }
  if (clients.empty() && client_count < 1) invalid("workload needs at least one client");
  const Range in = resolve(lengths.input_min, lengths.input_max, model.max_input_tokens);
  const Range out = resolve(lengths.output_min, lengths.output_max, model.max_output_tokens);
  if (in.lo < 1 || in.lo > in.hi || in.hi > model.max_input_tokens) {
    invalid("workload input length range outside [1, max_input_tokens]");
  }
  if (out.lo < 1 || out.lo > out.hi || out.hi > model.max_output_tokens) {
    invalid("workload output length range outside [1, max_output_tokens]");
  }
}

std::vector<Request> generate_requests(const Cluster& cluster, const WorkloadSpec& workload,
                                       std::uint64_t seed) {
  workload.validate(cluster.model, cluster.client_count());
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gap(workload.trace.empty() ? workload.rate : 1.0);
  const Range in = resolve(workload.lengths.input_min, workload.lengths.input_max,
                           cluster.model.max_input_tokens);
  const Range out = resolve(workload.lengths.output_min, workload.lengths.output_max,
                            cluster.model.max_output_tokens);
  std::uniform_int_distribution<int> input(in.lo, in.hi);
  std::uniform_int_distribution<int> output(out.lo, out.hi);
  const std::vector<int> clients = workload.clients.empty() ? std::vector<int>{0} : workload.clients;
  std::uniform_int_distribution<std::size_t> pick(0, clients.size() - 1);

  std::vector<double> arrivals = workload.trace;
  if (arrivals.empty()) {
    double t = 0.0;
    for (int i = 0; i < workload.count; ++i) {
      t += gap(rng);
      arrivals.push_back(t);
    }
  } else {
    std::stable_sort(arrivals.begin(), arrivals.end());
  }

  std::vector<Request> requests;
  requests.reserve(arrivals.size());
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    Request r;
    r.id = "r" + std::to_string(i);
    r.client = clients.size() == 1 ? clients[0] : clients[pick(rng)];
    r.arrival = arrivals[i];
    r.input_tokens = in.lo == in.hi ? in.lo : input(rng);
    r.output_tokens = out.lo == out.hi ? out.lo : output(rng);
    requests.push_back(std::move(r));
  }
  return requests;
}

}  // namespace bprr
