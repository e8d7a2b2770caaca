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

// Small clusters shared by unit and acceptance tests.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "bprr/model.hpp"

namespace fixture {

/// Identical servers and clients. Cache size is pinned to `cache` bytes per block-session.
inline bprr::Cluster uniform(int blocks, int servers, bprr::Bytes block_bytes, bprr::Bytes cache,
                             bprr::Bytes memory, double rtt, double tau, int clients = 1) {
  bprr::Cluster c;
  c.model.blocks = blocks;
  c.model.block_bytes = block_bytes;
  c.model.cache_bytes_override = cache;
  c.model.max_input_tokens = 1;
  c.model.max_output_tokens = 1;
  for (int j = 0; j < servers; ++j) {
    c.servers.push_back({"s" + std::to_string(j), memory, tau, bprr::Affine{tau, 0.0}});
  }
  for (int i = 0; i < clients; ++i) {
    bprr::ClientSpec cl;
    cl.id = "c" + std::to_string(i);
    cl.rtt.assign(servers, rtt);
    cl.rtt_prefill.assign(servers, bprr::Affine{rtt, 0.0});
    c.clients.push_back(cl);
  }
  return c;
}

/// L = 3 blocks, M = (L + 1) s_m, s_m = L s_c with s_c = 1.
inline bprr::Cluster suboptimal_greedy(double rtt, double tau, int servers = 9) {
  return uniform(3, servers, 3, 1, 12, rtt, tau);
}

/// Partition reduction: server 0 serves Delta sessions at cost 2, server j
/// serves w_j sessions at cost 1; everyone fits exactly one block.
inline bprr::Cluster partition_reduction(const std::vector<int>& w) {
  int total = 0;
  for (int x : w) total += x;
  const int delta = total / 2;
  const bprr::Bytes s_m = delta + 1;
  bprr::Cluster c;
  c.model.blocks = 2;
  c.model.block_bytes = s_m;
  c.model.cache_bytes_override = 1;
  c.model.max_input_tokens = 1;
  c.model.max_output_tokens = 1;
  c.servers.push_back({"slow", s_m + delta, 1.0, bprr::Affine{1.0, 0.0}});
  for (std::size_t j = 0; j < w.size(); ++j) {
    c.servers.push_back({"w" + std::to_string(j), s_m + w[j], 0.5, bprr::Affine{0.5, 0.0}});
  }
  bprr::ClientSpec cl;
  cl.id = "proxy";
  cl.rtt.push_back(1.0);
  cl.rtt_prefill.push_back({1.0, 0.0});
  for (std::size_t j = 0; j < w.size(); ++j) {
    cl.rtt.push_back(0.5);
    cl.rtt_prefill.push_back({0.5, 0.0});
  }
  c.clients.push_back(cl);
  return c;
}

inline std::vector<bprr::Request> requests(int count, int clients = 1, int l_in = 1, int l_out = 1) {
  std::vector<bprr::Request> out;
  for (int r = 0; r < count; ++r) {
    out.push_back({"r" + std::to_string(r), r % clients, 0.0, l_in, l_out});
  }
  return out;
}

/// A random cluster small enough for exhaustive solvers.
inline bprr::Cluster random_tiny(std::mt19937_64& rng, int max_blocks, int max_servers,
                                 int max_clients) {
  auto pick = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto real = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  bprr::Cluster c;
  c.model.blocks = pick(1, max_blocks);
  c.model.block_bytes = pick(2, 6);
  c.model.cache_bytes_override = 1;
  c.model.max_input_tokens = 4;
  c.model.max_output_tokens = 8;
  const int n = pick(1, max_servers);
  for (int j = 0; j < n; ++j) {
    const bprr::Bytes memory =
        c.model.block_bytes + 1 + pick(0, static_cast<int>(c.model.block_bytes) * c.model.blocks + 6);
    const double tau = real(0.01, 0.2);
    c.servers.push_back({"s" + std::to_string(j), memory, tau, bprr::Affine{tau * 1.5, tau * 0.05}});
  }
  const int clients = pick(1, max_clients);
  for (int i = 0; i < clients; ++i) {
    bprr::ClientSpec cl;
    cl.id = "c" + std::to_string(i);
    for (int j = 0; j < n; ++j) {
      const double rtt = real(0.01, 0.5);
      cl.rtt.push_back(rtt);
      cl.rtt_prefill.push_back({rtt, real(0.0, 0.01)});
    }
    c.clients.push_back(cl);
  }
  return c;
}

}  // namespace fixture
