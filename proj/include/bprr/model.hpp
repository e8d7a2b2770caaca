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
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bprr/blocks.hpp"

namespace bprr {

using Bytes = std::int64_t;
using Seconds = double;

/// f(l) = base + per_token * l, used for input-length dependent prefill times.
struct Affine {
  double base = 0.0;
  double per_token = 0.0;

  double operator()(int tokens) const noexcept { return base + per_token * tokens; }
  friend bool operator==(const Affine&, const Affine&) = default;
};

struct ModelSpec {
  int blocks = 1;                 // L
  std::int64_t d_model = 1;
  std::int64_t dtype_bytes = 2;
  Bytes block_bytes = 1;          // s_m
  int max_input_tokens = 1;
  int max_output_tokens = 1;
  int max_sequence_length = 0;    // 0 disables the check
  /// Replaces the derived per-block cache size at maximum lengths. Shorter
  /// requests scale it proportionally (rounded up).
  std::optional<Bytes> cache_bytes_override;

  /// s_c: cache bytes per block for a maximum-length request.
  Bytes cache_bytes() const;
  /// s_c^r for a request with the given lengths.
  Bytes cache_bytes(int input_tokens, int output_tokens) const;

  void validate() const;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct ServerSpec {
  std::string id;
  Bytes memory = 0;               // effective memory M_j
  double tau = 0.0;               // decode seconds per token per block
  Affine tau_prefill;             // prefill seconds per block as a function of l_in

  friend bool operator==(const ServerSpec&, const ServerSpec&) = default;
};

/// Per-client network terms, indexed by server position in Cluster::servers.
struct ClientSpec {
  std::string id;
  std::vector<double> rtt;
  std::vector<Affine> rtt_prefill;

  friend bool operator==(const ClientSpec&, const ClientSpec&) = default;
};

struct Cluster {
  ModelSpec model;
  std::vector<ServerSpec> servers;
  std::vector<ClientSpec> clients;
  /// Directed server-to-server pairs (by index) removed from the routing graph.
  std::vector<std::pair<int, int>> forbidden_links;

  /// Throws Error(kValidation) with a message naming the offending entry.
  void validate() const;

  int server_count() const noexcept { return static_cast<int>(servers.size()); }
  int client_count() const noexcept { return static_cast<int>(clients.size()); }
  int server_index(const std::string& id) const;  // -1 when absent
  int client_index(const std::string& id) const;  // -1 when absent
  bool link_allowed(int from_server, int to_server) const noexcept;
  /// t_*j: worst decode RTT to server j over all clients.
  double max_rtt(int server) const;

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

struct Placement {
  std::vector<BlockSpan> spans;  // one per server; count 0 means not hosting

  int size() const noexcept { return static_cast<int>(spans.size()); }
  bool hosts(int server) const { return !spans.at(server).empty(); }
  /// Every block 1..L hosted by at least one server.
  bool covers(int blocks) const;
  /// Every span is either empty or lies within 1..L.
  bool well_formed(int blocks) const;

  friend bool operator==(const Placement&, const Placement&) = default;
};

/// Routing-graph endpoints that are not servers.
inline constexpr int kSourceNode = -1;
inline constexpr int kSinkNode = -2;

BlockSpan node_span(const Placement& placement, int node, int blocks);

struct Request {
  std::string id;
  int client = 0;
  double arrival = 0.0;
  int input_tokens = 1;
  int output_tokens = 1;

  friend bool operator==(const Request&, const Request&) = default;
};

struct RouteAssignment {
  std::vector<int> servers;
  std::vector<int> blocks;  // processed per hop, sums to L

  bool empty() const noexcept { return servers.empty(); }
  friend bool operator==(const RouteAssignment&, const RouteAssignment&) = default;
};

/// Selects which per-token cost a hop is charged.
///
/// The decode basis charges t_cj + tau_j k. The all-token basis averages the
/// first token's prefill cost with l_out - 1 decode tokens, so that l_out times
/// a path's cost equals the request's total inference time.
struct TokenBasis {
  int input_tokens = 0;
  int output_tokens = 0;  // 0 selects the decode basis

  static TokenBasis decode() noexcept { return {}; }
  static TokenBasis all_tokens(int input_tokens, int output_tokens);

  bool is_decode() const noexcept { return output_tokens == 0; }
  double rtt(const Cluster& cluster, int client, int server) const;
  double tau(const Cluster& cluster, int server) const;
  double max_rtt(const Cluster& cluster, int server) const;
};

Bytes cache_size(const ModelSpec& model, int input_tokens, int output_tokens);

Seconds per_token_time(const Cluster& cluster, const Placement& placement, int client,
                       int prev_node, int server);
Seconds per_token_time_first(const Cluster& cluster, const Placement& placement, int client,
                             int prev_node, int server, int input_tokens);
Seconds avg_per_token_time(const Cluster& cluster, const Placement& placement, int client,
                           int prev_node, int server, int input_tokens, int output_tokens);

/// Time to generate every token along `chain`. Throws kInfeasibleEdge.
Seconds total_request_time(const Cluster& cluster, const Placement& placement, int client,
                           std::span<const int> chain, int input_tokens, int output_tokens);
/// Prefill latency along `chain`.
Seconds first_token_time(const Cluster& cluster, const Placement& placement, int client,
                         std::span<const int> chain, int input_tokens);

struct CacheUse {
  int blocks = 0;
  Bytes cache_bytes = 0;
};

Bytes server_memory_usage(const ModelSpec& model, const Placement& placement, int server,
                          std::span<const CacheUse> routed);

/// tau_j + t_*j / m under the given basis.
Seconds amortized_time(const Cluster& cluster, int server, int blocks,
                       const TokenBasis& basis = TokenBasis::decode());

/// floor((M_j - s_m m) / (s_c m)): full-chain sessions the free memory holds.
std::int64_t server_capacity(const ModelSpec& model, const ServerSpec& server, int blocks);

}  // namespace bprr
