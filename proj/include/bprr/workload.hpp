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

#include <cstdint>
#include <vector>

#include "bprr/model.hpp"

namespace bprr {

/// Inclusive token-count ranges. Zero bounds default to the model maximum.
struct LengthModel {
  int input_min = 0;
  int input_max = 0;
  int output_min = 0;
  int output_max = 0;

  static LengthModel fixed(int input_tokens, int output_tokens) {
    return {input_tokens, input_tokens, output_tokens, output_tokens};
  }
  friend bool operator==(const LengthModel&, const LengthModel&) = default;
};

struct WorkloadSpec {
  double rate = 0.5;             // Poisson arrivals per second
  int count = 100;               // requests
  std::vector<int> clients;      // source clients by index; empty means client 0
  LengthModel lengths;
  std::uint64_t seed = 1;
  std::vector<double> trace;     // explicit arrival times; overrides rate and count

  /// Throws kValidation.
  void validate(const ModelSpec& model, int client_count) const;
  friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

/// Requests sorted by arrival, ids "r0", "r1", ... Deterministic in `seed`.
std::vector<Request> generate_requests(const Cluster& cluster, const WorkloadSpec& workload,
                                       std::uint64_t seed);

}  // namespace bprr
