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

#include "bprr/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "bprr/error.hpp"

namespace bprr {

namespace {

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorCode::kValidation, message);
}

BlockSpan checked_span(const Placement& placement, int node, int blocks) {
  if (node >= 0 && node >= placement.size()) {
    throw Error(ErrorCode::kContract, "server index out of range");
  }
  return node_span(placement, node, blocks);
}

int hop_blocks(const Cluster& cluster, const Placement& placement, int prev_node, int server) {
  require(server >= 0 && server < cluster.server_count(), "server index out of range");
  const int L = cluster.model.blocks;
  const BlockSpan prev = checked_span(placement, prev_node, L);
  const BlockSpan next = checked_span(placement, server, L);
  if (!edge_feasible(prev, next)) {
    std::ostringstream os;
    os << "edge " << prev_node << " -> " << server << " does not continue the block sequence";
    throw Error(ErrorCode::kInfeasibleEdge, os.str());
  }
  return processed_blocks(prev, next);
}

void check_lengths(const ModelSpec& model, int input_tokens, int output_tokens) {
  require(input_tokens >= 1 && input_tokens <= model.max_input_tokens,
          "input length outside [1, max_input_tokens]");
  require(output_tokens >= 1 && output_tokens <= model.max_output_tokens,
          "output length outside [1, max_output_tokens]");
}

void check_chain_exit(const Cluster& cluster, const Placement& placement,
                      std::span<const int> chain) {
  if (chain.empty()) throw Error(ErrorCode::kInfeasibleEdge, "empty chain");
  const int L = cluster.model.blocks;
  if (!edge_feasible(checked_span(placement, chain.back(), L), sink_span(L))) {
    throw Error(ErrorCode::kInfeasibleEdge, "chain does not reach the last block");
  }
}

}  // namespace

Bytes cache_size(const ModelSpec& model, int input_tokens, int output_tokens) {
  require(input_tokens >= 1 && output_tokens >= 1, "token counts must be positive");
  return 2 * model.d_model * (input_tokens + output_tokens) * model.dtype_bytes;
}

Bytes ModelSpec::cache_bytes() const {
  if (cache_bytes_override) return *cache_bytes_override;
  return cache_size(*this, max_input_tokens, max_output_tokens);
}

Bytes ModelSpec::cache_bytes(int input_tokens, int output_tokens) const {
  if (!cache_bytes_override) return cache_size(*this, input_tokens, output_tokens);
  require(input_tokens >= 1 && output_tokens >= 1, "token counts must be positive");
  const Bytes full = *cache_bytes_override;
  const Bytes num = full * (input_tokens + output_tokens);
  const Bytes den = max_input_tokens + max_output_tokens;
  return (num + den - 1) / den;
}

void ModelSpec::validate() const {
  if (blocks < 1) invalid("model.blocks must be >= 1");
  if (d_model < 1) invalid("model.d_model must be >= 1");
  if (dtype_bytes < 1) invalid("model.dtype_bytes must be >= 1");
  if (block_bytes < 1) invalid("model.block_bytes must be >= 1");
  if (max_input_tokens < 1) invalid("model.max_input_tokens must be >= 1");
  if (max_output_tokens < 1) invalid("model.max_output_tokens must be >= 1");
  if (max_sequence_length < 0) invalid("model.max_sequence_length must be >= 0");
  if (max_sequence_length > 0 && max_input_tokens + max_output_tokens > max_sequence_length) {
    invalid("model: max_input_tokens + max_output_tokens exceeds max_sequence_length");
  }
  if (cache_bytes_override && *cache_bytes_override < 1) {
    invalid("model.cache_bytes must be >= 1");
  }
}

void Cluster::validate() const {
  model.validate();
  const Bytes per_block = model.block_bytes + model.cache_bytes();
  std::set<std::string> ids;
  for (std::size_t j = 0; j < servers.size(); ++j) {
    const ServerSpec& s = servers[j];
    const std::string where = "servers[" + std::to_string(j) + "] '" + s.id + "'";
    if (s.id.empty()) invalid(where + ": empty id");
    if (!ids.insert(s.id).second) invalid(where + ": duplicate id");
    if (s.memory < per_block) {
      invalid(where + ": memory below one block plus one cache (" + std::to_string(per_block) +
              " bytes)");
    }
    if (!(s.tau > 0.0) || !std::isfinite(s.tau)) invalid(where + ": tau must be positive");
    if (s.tau_prefill.base < 0.0 || s.tau_prefill.per_token < 0.0) {
      invalid(where + ": tau_prefill coefficients must be non-negative");
    }
  }
  std::set<std::string> client_ids;
  for (std::size_t c = 0; c < clients.size(); ++c) {
    const ClientSpec& cl = clients[c];
    const std::string where = "clients[" + std::to_string(c) + "] '" + cl.id + "'";
    if (cl.id.empty()) invalid(where + ": empty id");
    if (!client_ids.insert(cl.id).second) invalid(where + ": duplicate id");
    if (cl.rtt.size() != servers.size() || cl.rtt_prefill.size() != servers.size()) {
      invalid(where + ": rtt table does not cover every server");
    }
    for (std::size_t j = 0; j < servers.size(); ++j) {
      if (!(cl.rtt[j] > 0.0) || !std::isfinite(cl.rtt[j])) {
        invalid(where + ": rtt to '" + servers[j].id + "' must be positive");
      }
      if (cl.rtt_prefill[j].base < 0.0 || cl.rtt_prefill[j].per_token < 0.0) {
        invalid(where + ": rtt_prefill to '" + servers[j].id + "' must be non-negative");
      }
    }
  }
  for (const auto& [a, b] : forbidden_links) {
    if (a < 0 || b < 0 || a >= server_count() || b >= server_count()) {
      invalid("forbidden_links: server index out of range");
    }
  }
}

int Cluster::server_index(const std::string& id) const {
  for (int j = 0; j < server_count(); ++j) {
    if (servers[j].id == id) return j;
  }
  return -1;
}

int Cluster::client_index(const std::string& id) const {
  for (int c = 0; c < client_count(); ++c) {
    if (clients[c].id == id) return c;
  }
  return -1;
}

bool Cluster::link_allowed(int from_server, int to_server) const noexcept {
  return std::find(forbidden_links.begin(), forbidden_links.end(),
                   std::pair<int, int>{from_server, to_server}) == forbidden_links.end();
}

double Cluster::max_rtt(int server) const { return TokenBasis::decode().max_rtt(*this, server); }

bool Placement::covers(int blocks) const {
  std::vector<char> hit(static_cast<std::size_t>(blocks) + 1, 0);
  for (const BlockSpan& s : spans) {
    for (int b = std::max(1, s.first); b < std::min(s.end(), blocks + 1); ++b) hit[b] = 1;
  }
  return std::all_of(hit.begin() + 1, hit.end(), [](char h) { return h != 0; });
}

bool Placement::well_formed(int blocks) const {
  return std::all_of(spans.begin(), spans.end(), [blocks](const BlockSpan& s) {
    return s.count == 0 || (s.count > 0 && s.first >= 1 && s.last() <= blocks);
  });
}

BlockSpan node_span(const Placement& placement, int node, int blocks) {
  if (node == kSourceNode) return source_span();
  if (node == kSinkNode) return sink_span(blocks);
  return placement.spans.at(static_cast<std::size_t>(node));
}

TokenBasis TokenBasis::all_tokens(int input_tokens, int output_tokens) {
  require(input_tokens >= 1 && output_tokens >= 1, "token counts must be positive");
  return {input_tokens, output_tokens};
}

double TokenBasis::rtt(const Cluster& cluster, int client, int server) const {
  const ClientSpec& c = cluster.clients.at(client);
  const double t = c.rtt.at(server);
  if (is_decode()) return t;
  const double first = c.rtt_prefill.at(server)(input_tokens);
  return (first + (output_tokens - 1) * t) / output_tokens;
}

double TokenBasis::tau(const Cluster& cluster, int server) const {
  const ServerSpec& s = cluster.servers.at(server);
  if (is_decode()) return s.tau;
  return (s.tau_prefill(input_tokens) + (output_tokens - 1) * s.tau) / output_tokens;
}

double TokenBasis::max_rtt(const Cluster& cluster, int server) const {
  double worst = 0.0;
  for (int c = 0; c < cluster.client_count(); ++c) worst = std::max(worst, rtt(cluster, c, server));
  return worst;
}

Seconds per_token_time(const Cluster& cluster, const Placement& placement, int client,
                       int prev_node, int server) {
  const int k = hop_blocks(cluster, placement, prev_node, server);
  return cluster.clients.at(client).rtt.at(server) + cluster.servers[server].tau * k;
}

Seconds per_token_time_first(const Cluster& cluster, const Placement& placement, int client,
                             int prev_node, int server, int input_tokens) {
  require(input_tokens >= 1 && input_tokens <= cluster.model.max_input_tokens,
          "input length outside [1, max_input_tokens]");
  const int k = hop_blocks(cluster, placement, prev_node, server);
  return cluster.clients.at(client).rtt_prefill.at(server)(input_tokens) +
         cluster.servers[server].tau_prefill(input_tokens) * k;
}

Seconds avg_per_token_time(const Cluster& cluster, const Placement& placement, int client,
                           int prev_node, int server, int input_tokens, int output_tokens) {
  check_lengths(cluster.model, input_tokens, output_tokens);
  const int k = hop_blocks(cluster, placement, prev_node, server);
  const TokenBasis basis = TokenBasis::all_tokens(input_tokens, output_tokens);
  return basis.rtt(cluster, client, server) + basis.tau(cluster, server) * k;
}

Seconds total_request_time(const Cluster& cluster, const Placement& placement, int client,
                           std::span<const int> chain, int input_tokens, int output_tokens) {
  check_lengths(cluster.model, input_tokens, output_tokens);
  check_chain_exit(cluster, placement, chain);
  double first = 0.0;
  double decode = 0.0;
  int prev = kSourceNode;
  for (int server : chain) {
    first += per_token_time_first(cluster, placement, client, prev, server, input_tokens);
    decode += per_token_time(cluster, placement, client, prev, server);
    prev = server;
  }
  return first + (output_tokens - 1) * decode;
}

Seconds first_token_time(const Cluster& cluster, const Placement& placement, int client,
                         std::span<const int> chain, int input_tokens) {
  check_chain_exit(cluster, placement, chain);
  double first = 0.0;
  int prev = kSourceNode;
  for (int server : chain) {
    first += per_token_time_first(cluster, placement, client, prev, server, input_tokens);
    prev = server;
  }
  return first;
}

Bytes server_memory_usage(const ModelSpec& model, const Placement& placement, int server,
                          std::span<const CacheUse> routed) {
  Bytes total = model.block_bytes * placement.spans.at(server).count;
  for (const CacheUse& use : routed) {
    require(use.blocks >= 0 && use.cache_bytes >= 0, "cache use must be non-negative");
    total += use.blocks * use.cache_bytes;
  }
  return total;
}

Seconds amortized_time(const Cluster& cluster, int server, int blocks, const TokenBasis& basis) {
  require(blocks >= 1, "amortized time needs at least one block");
  return basis.tau(cluster, server) + basis.max_rtt(cluster, server) / blocks;
}

std::int64_t server_capacity(const ModelSpec& model, const ServerSpec& server, int blocks) {
  require(blocks >= 1, "capacity needs at least one block");
  const Bytes weights = model.block_bytes * blocks;
  if (weights > server.memory) {
    throw Error(ErrorCode::kContract, "server '" + server.id + "' cannot hold " +
                                          std::to_string(blocks) + " blocks");
  }
  return (server.memory - weights) / (model.cache_bytes() * blocks);
}

}  // namespace bprr
