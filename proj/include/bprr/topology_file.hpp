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
#include <filesystem>
#include <string>
#include <vector>

#include "bprr/execution.hpp"
#include "bprr/model.hpp"

namespace bprr {

struct TopologyLink {
  std::string a;
  std::string b;
  double delay_ms = 0.0;
  double capacity_gbps = 0.0;  // parsed and kept, not used for timing
};

/// Node and link list. Links are arcs a -> b when `directed`, else both ways.
struct Topology {
  std::string name;
  bool directed = false;
  std::vector<std::string> nodes;
  std::vector<TopologyLink> links;

  int node_index(const std::string& id) const;  // -1 when absent
};

/// Throws kValidation (bad document) or kIo (unreadable file).
Topology load_topology(const std::filesystem::path& path);
Topology parse_topology_text(const std::string& text);

/// One-way delay in seconds along the delay-shortest path for every ordered
/// node pair; +inf when unreachable.
std::vector<std::vector<double>> all_pairs_delay(const Topology& topology,
                                                 Execution execution = Execution::kParallel);

struct HardwareClass {
  Bytes memory = 0;
  double tau = 0.0;
  Affine tau_prefill;
  friend bool operator==(const HardwareClass&, const HardwareClass&) = default;
};

/// Converts a network RTT into per-token and prefill client terms:
/// t = rtt + overhead and t^I(l) = rtt + overhead + l * 8 * bytes_per_token / bandwidth.
struct LinkTiming {
  double overhead = 0.0;
  double bytes_per_token = 0.0;  // 0 means d_model * dtype_bytes
  friend bool operator==(const LinkTiming&, const LinkTiming&) = default;
};

void set_link(const ModelSpec& model, const LinkTiming& timing, double rtt,
              double bandwidth_bps, double& per_token, Affine& prefill);

struct ScatteredPreset {
  ModelSpec model;
  HardwareClass fast;
  HardwareClass slow;
  int servers = 9;              // C
  double fast_fraction = 0.2;   // eta
  std::uint64_t seed = 1;
  double bandwidth_bps = 1e9;
  LinkTiming timing;
};

struct ScatteredCluster {
  Cluster cluster;
  std::vector<std::string> server_nodes;  // topology node of each server
  std::string client_node;
};

/// Servers on C random nodes, ceil(eta C) of them fast, one client on a random
/// node without a server. Throws kValidation when C leaves no client node or
/// the topology is disconnected.
ScatteredCluster generate_scattered(const Topology& topology, const ScatteredPreset& preset);

}  // namespace bprr
