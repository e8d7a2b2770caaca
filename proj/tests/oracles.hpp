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

// Brute-force reference implementations. None of these call into the library
// beyond reading plain data fields, so they can be trusted to disagree with it.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <vector>

#include "bprr/model.hpp"
#include "bprr/routing.hpp"

namespace oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Explicit block sets: the client needs block 1 first; a server may take over
// only if it holds the next needed block, and then runs to its last block.
inline std::set<int> block_set(const bprr::BlockSpan& s) {
  std::set<int> out;
  for (int b = s.first; b < s.first + s.count; ++b) out.insert(b);
  return out;
}

/// Blocks the server processes when `next_needed` is the first missing block,
/// or -1 if it cannot continue the chain.
inline int consume(const bprr::BlockSpan& span, int next_needed) {
  const std::set<int> blocks = block_set(span);
  if (!blocks.count(next_needed)) return -1;
  int processed = 0;
  for (int b : blocks) processed += b >= next_needed ? 1 : 0;
  return processed;
}

/// Block after the last one a node has made available: 1 at the source.
inline int next_needed_after(const bprr::Placement& p, int node) {
  if (node == bprr::kSourceNode) return 1;
  return *block_set(p.spans[node]).rbegin() + 1;
}

inline bool edge_ok(const bprr::Placement& p, int L, int prev, int next) {
  if (prev == bprr::kSinkNode || next == bprr::kSourceNode) return false;
  if (prev != bprr::kSourceNode && p.spans[prev].count == 0) return false;
  const int need = next_needed_after(p, prev);
  if (next == bprr::kSinkNode) return need == L + 1;
  if (p.spans[next].count == 0) return false;
  return consume(p.spans[next], need) >= 1;
}

/// Walks the chain block by block. Returns processed counts, or empty if infeasible.
inline std::vector<int> walk(const bprr::Placement& p, int L, const std::vector<int>& chain) {
  if (chain.empty()) return {};
  int need = 1;
  std::vector<int> processed;
  for (int j : chain) {
    if (p.spans[j].count == 0) return {};
    const int k = consume(p.spans[j], need);
    if (k < 1) return {};
    processed.push_back(k);
    need = *block_set(p.spans[j]).rbegin() + 1;
  }
  if (need != L + 1) return {};
  return processed;
}

/// Earliest instant after `now` at which `needed` units are free, by stepping
/// through every distinct completion instant.
inline double completion_order_wait(const std::vector<bprr::Session>& sessions,
                                    std::int64_t capacity, double now, std::int64_t needed) {
  std::vector<double> instants{now};
  for (const auto& s : sessions) {
    if (s.end > now) instants.push_back(s.end);
  }
  std::sort(instants.begin(), instants.end());
  for (double t : instants) {
    std::int64_t busy = 0;
    for (const auto& s : sessions) {
      if (s.end > t) busy += s.units;
    }
    if (capacity - busy >= needed) return t - now;
  }
  return kInf;
}

/// True while every hop so far continues the chain; completion not required.
inline bool walk_prefix_ok(const bprr::Placement& p, const std::vector<int>& chain) {
  int need = 1;
  for (int j : chain) {
    if (p.spans[j].count == 0 || consume(p.spans[j], need) < 1) return false;
    need = *block_set(p.spans[j]).rbegin() + 1;
  }
  return true;
}

/// Every feasible server chain, found by depth-first search over all
/// sequences of distinct hosting servers.
inline std::vector<std::vector<int>> all_chains(const bprr::Cluster& c, const bprr::Placement& p) {
  const int n = c.server_count();
  const int L = c.model.blocks;
  std::vector<std::vector<int>> out;
  std::vector<int> chain;
  std::vector<char> used(n, 0);
  std::function<void()> dfs = [&] {
    if (!chain.empty() && !walk(p, L, chain).empty()) out.push_back(chain);
    for (int j = 0; j < n; ++j) {
      if (used[j]) continue;
      if (!chain.empty() && !c.link_allowed(chain.back(), j)) continue;
      chain.push_back(j);
      used[j] = 1;
      if (!walk_prefix_ok(p, chain)) {
        chain.pop_back();
        used[j] = 0;
        continue;
      }
      dfs();
      chain.pop_back();
      used[j] = 0;
    }
  };
  dfs();
  return out;
}

/// Per-token cost of one hop averaged over first and decode tokens, written out from fields.
inline double hop_cost(const bprr::Cluster& c, int client, int server, int blocks, int l_in,
                       int l_out) {
  const bprr::ServerSpec& s = c.servers[server];
  const bprr::ClientSpec& cl = c.clients[client];
  if (l_out == 0) return cl.rtt[server] + s.tau * blocks;
  const double first = cl.rtt_prefill[server](l_in) + s.tau_prefill(l_in) * blocks;
  const double rest = cl.rtt[server] + s.tau * blocks;
  return (first + (l_out - 1) * rest) / l_out;
}

inline double chain_cost(const bprr::Cluster& c, const bprr::Placement& p, int client,
                         const std::vector<int>& chain, int l_in, int l_out) {
  const std::vector<int> k = walk(p, c.model.blocks, chain);
  double total = 0.0;
  for (std::size_t h = 0; h < chain.size(); ++h) total += hop_cost(c, client, chain[h], k[h], l_in, l_out);
  return total;
}

/// Cheapest chain cost by exhaustive enumeration; +inf if none. l_out = 0 is decode.
inline double best_chain_cost(const bprr::Cluster& c, const bprr::Placement& p, int client,
                              int l_in = 0, int l_out = 0) {
  double best = kInf;
  for (const auto& chain : all_chains(c, p)) best = std::min(best, chain_cost(c, p, client, chain, l_in, l_out));
  return best;
}

/// Minimum over chains of max hop wait + l_out * cost, with waits from the
/// completion-order oracle.
inline double best_online_objective(const bprr::Cluster& c, const bprr::Placement& p, int client,
                                    const std::vector<bprr::ServerState>& states, double now,
                                    int l_in, int l_out) {
  double best = kInf;
  for (const auto& chain : all_chains(c, p)) {
    const std::vector<int> k = walk(p, c.model.blocks, chain);
    double w = 0.0;
    double cost = 0.0;
    for (std::size_t h = 0; h < chain.size(); ++h) {
      const auto& st = states[chain[h]];
      std::vector<bprr::Session> sessions(st.sessions().begin(), st.sessions().end());
      w = std::max(w, completion_order_wait(sessions, st.capacity(), now, k[h]));
      cost += hop_cost(c, client, chain[h], k[h], l_in, l_out);
    }
    best = std::min(best, w + l_out * cost);
  }
  return best;
}

/// Breadth-first search over servers using the block-set edge test.
inline bool reachable(const bprr::Placement& p, int L) {
  const int n = p.size();
  std::vector<char> seen(n, 0);
  std::vector<int> frontier;
  for (int j = 0; j < n; ++j) {
    if (edge_ok(p, L, bprr::kSourceNode, j)) {
      seen[j] = 1;
      frontier.push_back(j);
    }
  }
  while (!frontier.empty()) {
    const int i = frontier.back();
    frontier.pop_back();
    if (edge_ok(p, L, i, bprr::kSinkNode)) return true;
    for (int j = 0; j < n; ++j) {
      if (!seen[j] && j != i && edge_ok(p, L, i, j)) {
        seen[j] = 1;
        frontier.push_back(j);
      }
    }
  }
  return false;
}

/// Optimal objective of the partition reduction: 2 * Delta + min epsilon.
inline int partition_objective(const std::vector<int>& w) {
  int total = 0;
  for (int x : w) total += x;
  const int delta = total / 2;
  int best = total;
  const int n = static_cast<int>(w.size());
  for (int mask = 0; mask < (1 << n); ++mask) {
    int s = 0;
    for (int i = 0; i < n; ++i) s += (mask >> i & 1) ? w[i] : 0;
    if (s >= total - s) best = std::min(best, (s - (total - s)) / 2);
  }
  return 2 * delta + best;
}

}  // namespace oracle
