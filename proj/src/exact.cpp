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

#include "bprr/exact.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "bprr/error.hpp"
#include "bprr/topology.hpp"

namespace bprr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct CandidatePath {
  RouteAssignment route;
  double cost = 0.0;
  std::vector<Bytes> units;  // per hop
};

struct RequestClass {
  int client = 0;
  int input_tokens = 1;
  int output_tokens = 1;
  std::vector<int> members;  // request indices
};

struct Incumbent {
  double objective = kInf;
  std::int64_t placement = -1;
  std::vector<int> choice;  // path index per request
  std::vector<std::vector<CandidatePath>> paths;
  std::int64_t placements_visited = 0;
  std::int64_t assignments_visited = 0;
};

class Search {
 public:
  Search(const Cluster& cluster, const std::vector<Request>& requests, const ExactOptions& options)
      : cluster_(cluster), requests_(requests), options_(options) {
    const int L = cluster.model.blocks;
    for (const ServerSpec& s : cluster.servers) {
      std::vector<BlockSpan> list;
      for (int a = 1; a <= L; ++a) {
        for (int m = 1; a + m - 1 <= L; ++m) {
          if (cluster.model.block_bytes * m <= s.memory) list.push_back({a, m});
        }
      }
      candidates_.push_back(std::move(list));
    }
    std::map<std::tuple<int, int, int>, int> index;
    for (int r = 0; r < static_cast<int>(requests.size()); ++r) {
      const Request& q = requests[r];
      const auto key = options.heterogeneous
                           ? std::make_tuple(q.client, q.input_tokens, q.output_tokens)
                           : std::make_tuple(q.client, 0, 0);
      auto [it, fresh] = index.try_emplace(key, static_cast<int>(classes_.size()));
      if (fresh) classes_.push_back({q.client, q.input_tokens, q.output_tokens, {}});
      classes_[it->second].members.push_back(r);
    }
  }

  std::int64_t placement_count() const {
    std::int64_t total = 1;
    for (const auto& list : candidates_) total *= static_cast<std::int64_t>(list.size());
    return total;
  }

  Placement decode(std::int64_t index) const {
    Placement p;
    p.spans.resize(candidates_.size());
    for (int j = static_cast<int>(candidates_.size()) - 1; j >= 0; --j) {
      const auto radix = static_cast<std::int64_t>(candidates_[j].size());
      p.spans[j] = candidates_[j][index % radix];
      index /= radix;
    }
    return p;
  }

  void visit(std::int64_t index, Incumbent& best) const {
    ++best.placements_visited;
    const Placement placement = decode(index);
    std::vector<std::vector<CandidatePath>> paths;
    std::vector<double> cheapest;
    for (const RequestClass& cls : classes_) {
      paths.push_back(class_paths(placement, cls));
      if (paths.back().empty()) return;
      double low = kInf;
      for (const CandidatePath& p : paths.back()) low = std::min(low, p.cost);
      cheapest.push_back(low);
    }
    // Lower bound on the cost of requests not yet assigned, per class suffix.
    std::vector<double> tail(classes_.size() + 1, 0.0);
    for (int c = static_cast<int>(classes_.size()) - 1; c >= 0; --c) {
      tail[c] = tail[c + 1] + cheapest[c] * static_cast<double>(classes_[c].members.size());
    }

    std::vector<Bytes> used(cluster_.servers.size());
    for (std::size_t j = 0; j < used.size(); ++j) {
      used[j] = cluster_.model.block_bytes * placement.spans[j].count;
    }
    std::vector<int> choice(requests_.size(), 0);
    bool improved = false;

    auto dfs = [&](auto&& self, std::size_t cls, std::size_t member, int min_path,
                   double partial) -> void {
      if (cls == classes_.size()) {
        ++best.assignments_visited;
        if (partial < best.objective) {
          best.objective = partial;
          best.placement = index;
          best.choice = choice;
          improved = true;
        }
        return;
      }
      const RequestClass& rc = classes_[cls];
      if (member == rc.members.size()) {
        self(self, cls + 1, 0, 0, partial);
        return;
      }
      const double remaining =
          cheapest[cls] * static_cast<double>(rc.members.size() - member - 1) + tail[cls + 1];
      const auto& list = paths[cls];
      for (int p = min_path; p < static_cast<int>(list.size()); ++p) {
        const CandidatePath& path = list[p];
        const double bound = partial + path.cost + remaining;
        if (bound > best.objective + 1e-9 * std::abs(best.objective)) continue;
        bool fits = true;
        for (std::size_t h = 0; h < path.units.size() && fits; ++h) {
          const int j = path.route.servers[h];
          fits = used[j] + path.units[h] <= cluster_.servers[j].memory;
        }
        if (!fits) continue;
        for (std::size_t h = 0; h < path.units.size(); ++h) used[path.route.servers[h]] += path.units[h];
        choice[rc.members[member]] = p;
        self(self, cls, member + 1, p, partial + path.cost);
        for (std::size_t h = 0; h < path.units.size(); ++h) used[path.route.servers[h]] -= path.units[h];
      }
    };
    dfs(dfs, 0, 0, 0, 0.0);
    if (improved) best.paths = std::move(paths);
  }

  ExactSolution finish(const Incumbent& best) const {
    ExactSolution out;
    out.placements_visited = best.placements_visited;
    out.assignments_visited = best.assignments_visited;
    if (best.placement < 0) {
      throw Error(ErrorCode::kInfeasible, "no placement admits every request within memory");
    }
    out.placement = decode(best.placement);
    out.objective = best.objective;
    out.routes.resize(requests_.size());
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      for (int r : classes_[c].members) out.routes[r] = best.paths[c][best.choice[r]].route;
    }
    return out;
  }

 private:
  std::vector<CandidatePath> class_paths(const Placement& placement,
                                         const RequestClass& cls) const {
    const TokenBasis basis = options_.heterogeneous
                                 ? TokenBasis::all_tokens(cls.input_tokens, cls.output_tokens)
                                 : TokenBasis::decode();
    const double weight = options_.heterogeneous ? cls.output_tokens : 1.0;
    const Bytes cache = options_.heterogeneous
                            ? cluster_.model.cache_bytes(cls.input_tokens, cls.output_tokens)
                            : cluster_.model.cache_bytes();
    const FeasibleSubgraph graph = feasible_subgraph(
        cluster_, placement, cls.client, basis_edge_cost(cluster_, cls.client, basis));
    std::vector<CandidatePath> out;
    for_each_path(
        graph,
        [&](std::span<const SubgraphEdge* const> path) {
          CandidatePath c;
          c.route = to_route(path);
          for (const SubgraphEdge* e : path) c.cost += e->cost;
          c.cost *= weight;
          for (int k : c.route.blocks) c.units.push_back(cache * k);
          out.push_back(std::move(c));
        },
        std::numeric_limits<std::size_t>::max());
    return out;
  }

  const Cluster& cluster_;
  const std::vector<Request>& requests_;
  const ExactOptions& options_;
  std::vector<std::vector<BlockSpan>> candidates_;
  std::vector<RequestClass> classes_;
};

bool better(const Incumbent& x, const Incumbent& y) {
  if (x.placement < 0) return false;
  if (y.placement < 0) return true;
  return x.objective != y.objective ? x.objective < y.objective : x.placement < y.placement;
}

}  // namespace

ExactSolution solve_exact(const Cluster& cluster, const std::vector<Request>& requests,
                          const ExactOptions& options) {
  const ExactLimits& lim = options.limits;
  if (cluster.model.blocks > lim.max_blocks || cluster.server_count() > lim.max_servers ||
      static_cast<int>(requests.size()) > lim.max_requests) {
    throw Error(ErrorCode::kBudgetExceeded, "instance exceeds the exact-solver limits");
  }
  if (cluster.servers.empty()) throw Error(ErrorCode::kEmptyCluster, "cluster has no servers");
  for (const Request& r : requests) {
    require(r.client >= 0 && r.client < cluster.client_count(), "request client out of range");
    require(r.input_tokens >= 1 && r.output_tokens >= 1, "request lengths must be positive");
  }

  const Search search(cluster, requests, options);
  const std::int64_t total = search.placement_count();

  Incumbent best;
  if (options.execution == Execution::kSerial) {
    for (std::int64_t i = 0; i < total; ++i) search.visit(i, best);
    return search.finish(best);
  }

  std::vector<Incumbent> local(static_cast<std::size_t>(omp_get_max_threads()));
#pragma omp parallel
  {
    Incumbent& mine = local[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < total; ++i) search.visit(i, mine);
  }
  for (Incumbent& inc : local) {
    best.placements_visited += inc.placements_visited;
    best.assignments_visited += inc.assignments_visited;
    if (better(inc, best)) {
      best.objective = inc.objective;
      best.placement = inc.placement;
      best.choice = std::move(inc.choice);
      best.paths = std::move(inc.paths);
    }
  }
  return search.finish(best);
}

}  // namespace bprr
