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
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "bprr/model.hpp"

namespace bprr {

struct MilpOptions {
  /// Per-request cache sizes and output-length weighted all-token costs.
  bool heterogeneous = false;
};

/// Sizes of the emitted model, computed from the instance alone.
struct MilpCounts {
  std::int64_t nodes = 0;
  std::int64_t edges = 0;
  std::int64_t binaries = 0;        // routing variables, one per request-edge
  std::int64_t integers = 0;        // first block and block count per server
  std::int64_t auxiliaries = 0;     // four per request-edge
  std::int64_t memory_rows = 0;
  std::int64_t flow_rows = 0;
  std::int64_t placement_rows = 0;
  std::int64_t feasibility_rows = 0;    // two per request-edge
  std::int64_t linearization_rows = 0;  // twelve per request-edge

  std::int64_t rows() const {
    return memory_rows + flow_rows + placement_rows + feasibility_rows + linearization_rows;
  }
  friend bool operator==(const MilpCounts&, const MilpCounts&) = default;
};

MilpCounts expected_milp_counts(const Cluster& cluster, const std::vector<Request>& requests);

/// Writes the linearized joint placement and routing model in CPLEX-LP format.
void emit_milp(const Cluster& cluster, const std::vector<Request>& requests, std::ostream& out,
               const MilpOptions& options = {});
/// Throws kIo when the file cannot be written.
void emit_milp(const Cluster& cluster, const std::vector<Request>& requests,
               const std::filesystem::path& path, const MilpOptions& options = {});

struct LpRow {
  std::string name;
  std::map<std::string, double> terms;
  std::string sense;  // "<=", ">=" or "="
  double rhs = 0.0;
};

struct LpBound {
  double lower = 0.0;
  double upper = 0.0;
  bool has_upper = false;
};

/// A parsed CPLEX-LP model, restricted to the constructs emit_milp produces.
struct LpModel {
  std::map<std::string, double> objective;
  std::vector<LpRow> rows;
  std::map<std::string, LpBound> bounds;
  std::vector<std::string> binaries;
  std::vector<std::string> integers;

  /// Counts rows and variables by the naming scheme emit_milp uses.
  MilpCounts counts() const;
  double objective_value(const std::map<std::string, double>& values) const;
  /// Names of rows or bounds violated by more than `tolerance`.
  std::vector<std::string> violations(const std::map<std::string, double>& values,
                                      double tolerance = 1e-6) const;
};

/// Throws kValidation on malformed input.
LpModel parse_lp(std::istream& in);

/// Variable values encoding a placement and one route per request.
std::map<std::string, double> milp_assignment(const Cluster& cluster,
                                              const std::vector<Request>& requests,
                                              const Placement& placement,
                                              const std::vector<RouteAssignment>& routes);

}  // namespace bprr
