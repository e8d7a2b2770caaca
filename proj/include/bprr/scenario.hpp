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

#include <filesystem>
#include <string>
#include <vector>

#include "bprr/model.hpp"
#include "bprr/simulator.hpp"
#include "bprr/topology_file.hpp"
#include "bprr/workload.hpp"
#include "json.hpp"

namespace bprr {

/// Three clusters: 0 holds clients only, 1 the fast servers, 2 the slow ones.
struct ClusteredPreset {
  ModelSpec model;
  HardwareClass fast;
  HardwareClass slow;
  int fast_servers = 2;
  int slow_servers = 7;
  std::vector<int> client_clusters{0};
  double intra_rtt = 0.005;
  double intra_bandwidth_bps = 1e9;
  double inter_rtt = 0.100;
  double inter_bandwidth_bps = 1e8;
  LinkTiming timing;
};

/// Placeholder coefficients (not measured values) for a 70-block model on two
/// large and seven small GPUs.
ClusteredPreset default_clustered_preset();

Cluster generate_clustered(const ClusteredPreset& preset);

struct Scenario {
  Cluster cluster;
  WorkloadSpec workload;
  Policy policy = Policy::kProposed;
  SimOptions options;
};

/// Throws kValidation with the JSON path of the offending field, or kIo.
/// One cell of a rate by output-length sweep: the workload takes `rate` and a
/// fixed output length. The model's maximum output length, which sizes the
/// deployment, is raised only when `output_tokens` exceeds it.
Scenario sweep_cell(const Scenario& base, double rate, int output_tokens);

Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const nlohmann::ordered_json& doc,
                        const std::filesystem::path& base_dir = {});

nlohmann::ordered_json cluster_to_json(const Cluster& cluster);
Cluster cluster_from_json(const nlohmann::ordered_json& doc);
nlohmann::ordered_json placement_to_json(const Cluster& cluster, const Placement& placement);
Placement placement_from_json(const Cluster& cluster, const nlohmann::ordered_json& doc);

nlohmann::ordered_json report_to_json(const SimReport& report, bool include_timing = false);
nlohmann::ordered_json monte_carlo_to_json(const MonteCarloReport& report,
                                           bool include_runs = false,
                                           bool include_timing = false);

/// Header: policy,metric,mean,std,runs
std::string monte_carlo_csv_header();
std::string monte_carlo_csv_rows(const MonteCarloReport& report);

}  // namespace bprr
