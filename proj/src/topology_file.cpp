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

#include "bprr/topology_file.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include "bprr/error.hpp"
#include "json.hpp"

namespace bprr {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& m) { throw Error(ErrorCode::kValidation, m); }

struct Arc {
  int to;
  double delay;
};

std::vector<std::vector<Arc>> adjacency(const Topology& t) {
  std::vector<std::vector<Arc>> adj(t.nodes.size());
  for (const TopologyLink& l : t.links) {
    const int a = t.node_index(l.a);
    const int b = t.node_index(l.b);
    const double d = l.delay_ms / 1000.0;
    adj[a].push_back({b, d});
    if (!t.directed) adj[b].push_back({a, d});
  }
  return adj;
}

std::vector<double> dijkstra(const std::vector<std::vector<Arc>>& adj, int source) {
  std::vector<double> dist(adj.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (const Arc& e : adj[u]) {
      const double nd = d + e.delay;
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        heap.push({nd, e.to});
      }
    }
  }
  return dist;
}

}  // namespace

int Topology::node_index(const std::string& id) const {
  const auto it = std::find(nodes.begin(), nodes.end(), id);
  return it == nodes.end() ? -1 : static_cast<int>(it - nodes.begin());
}

Topology parse_topology_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    invalid(std::string("topology: ") + e.what());
  }
  Topology t;
  try {
    t.name = doc.value("name", std::string());
    t.directed = doc.value("directed", false);
    if (!doc.contains("nodes") || !doc["nodes"].is_array()) invalid("topology: /nodes must be an array");
    if (!doc.contains("links") || !doc["links"].is_array()) invalid("topology: /links must be an array");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < doc["nodes"].size(); ++i) {
      const json& n = doc["nodes"][i];
      const std::string id = n.is_object() ? n.at("id").get<std::string>() : n.get<std::string>();
      if (!seen.insert(id).second) invalid("topology: /nodes/" + std::to_string(i) + " duplicate id");
      t.nodes.push_back(id);
    }
    for (std::size_t i = 0; i < doc["links"].size(); ++i) {
      const json& l = doc["links"][i];
      const std::string where = "topology: /links/" + std::to_string(i);
      TopologyLink link;
      link.a = l.at("a").get<std::string>();
      link.b = l.at("b").get<std::string>();
      link.delay_ms = l.at("delay_ms").get<double>();
      link.capacity_gbps = l.value("capacity_gbps", 0.0);
      if (!seen.count(link.a) || !seen.count(link.b)) invalid(where + " names an unknown node");
      if (!(link.delay_ms >= 0.0) || !std::isfinite(link.delay_ms)) invalid(where + " delay_ms must be >= 0");
      t.links.push_back(std::move(link));
    }
  } catch (const json::exception& e) {
    invalid(std::string("topology: ") + e.what());
  }
  return t;
}

Topology load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read topology '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_topology_text(ss.str());
}

std::vector<std::vector<double>> all_pairs_delay(const Topology& topology, Execution execution) {
  const auto adj = adjacency(topology);
  const int n = static_cast<int>(adj.size());
  std::vector<std::vector<double>> dist(static_cast<std::size_t>(n));
  if (execution == Execution::kSerial) {
    for (int s = 0; s < n; ++s) dist[s] = dijkstra(adj, s);
    return dist;
  }
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < n; ++s) dist[s] = dijkstra(adj, s);
  return dist;
}

void set_link(const ModelSpec& model, const LinkTiming& timing, double rtt, double bandwidth_bps,
              double& per_token, Affine& prefill) {
  const double bytes = timing.bytes_per_token > 0.0
                           ? timing.bytes_per_token
                           : static_cast<double>(model.d_model * model.dtype_bytes);
  per_token = rtt + timing.overhead;
  prefill = Affine{rtt + timing.overhead, 8.0 * bytes / bandwidth_bps};
}

ScatteredCluster generate_scattered(const Topology& topology, const ScatteredPreset& preset) {
  const int nodes = static_cast<int>(topology.nodes.size());
  if (preset.servers < 1) invalid("scattered: server count must be >= 1");
  if (preset.servers >= nodes) {
    invalid("scattered: " + std::to_string(preset.servers) + " servers leave no client node among " +
            std::to_string(nodes));
  }
  if (preset.fast_fraction < 0.0 || preset.fast_fraction > 1.0) {
    invalid("scattered: fast_fraction must lie in [0, 1]");
  }
  const auto delay = all_pairs_delay(topology);
  for (const auto& row : delay) {
    if (std::any_of(row.begin(), row.end(), [](double d) { return std::isinf(d); })) {
      invalid("scattered: topology '" + topology.name + "' is disconnected");
    }
  }

  std::mt19937_64 rng(preset.seed);
  std::vector<int> perm(static_cast<std::size_t>(nodes));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = nodes - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(perm[i], perm[pick(rng)]);
  }
  const std::vector<int> hosts(perm.begin(), perm.begin() + preset.servers);
  std::uniform_int_distribution<int> pick_client(preset.servers, nodes - 1);
  const int client = perm[pick_client(rng)];
  const int fast = static_cast<int>(std::ceil(preset.fast_fraction * preset.servers - 1e-12));

  ScatteredCluster out;
  Cluster& c = out.cluster;
  c.model = preset.model;
  ClientSpec cl;
  cl.id = "client@" + topology.nodes[client];
  for (int k = 0; k < preset.servers; ++k) {
    const HardwareClass& hw = k < fast ? preset.fast : preset.slow;
    const int node = hosts[k];
    c.servers.push_back({(k < fast ? "fast@" : "slow@") + topology.nodes[node], hw.memory, hw.tau,
                         hw.tau_prefill});
    out.server_nodes.push_back(topology.nodes[node]);
    double t = 0.0;
    Affine prefill;
    set_link(c.model, preset.timing, delay[client][node] + delay[node][client],
             preset.bandwidth_bps, t, prefill);
    cl.rtt.push_back(t);
    cl.rtt_prefill.push_back(prefill);
  }
  c.clients.push_back(std::move(cl));
  out.client_node = topology.nodes[client];
  c.validate();
  return out;
}

}  // namespace bprr
