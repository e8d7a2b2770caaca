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

// bprr: block placement and request routing planner.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bprr/bounds.hpp"
#include "bprr/error.hpp"
#include "bprr/exact.hpp"
#include "bprr/milp.hpp"
#include "bprr/petals.hpp"
#include "bprr/placement.hpp"
#include "bprr/routing.hpp"
#include "bprr/scenario.hpp"
#include "bprr/simulator.hpp"
#include "bprr/topology.hpp"

namespace {

using bprr::Error;
using bprr::ErrorCode;
using nlohmann::ordered_json;

enum class Format { kDefault, kCsv, kJson };

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  std::string scenario;

  Format fmt() const {
    if (format == "csv") return Format::kCsv;
    if (format == "json") return Format::kJson;
    return Format::kDefault;
  }
};

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBudgetExceeded:
    case ErrorCode::kInfeasible:
    case ErrorCode::kPlacementInfeasible:
    case ErrorCode::kNoFeasiblePath:
    case ErrorCode::kNeverAvailable:
      return 2;
    default:
      return 1;
  }
}

void write_output(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(g.out);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + g.out + "'");
  out << text;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string fmt_num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

bprr::Scenario load(const Globals& g) {
  bprr::Scenario s = bprr::load_scenario(g.scenario);
  if (g.seed) s.workload.seed = *g.seed;
  return s;
}

bprr::TokenBasis placement_basis(const bprr::Scenario& s) {
  return bprr::placement_basis(s.cluster, s.options);
}

bprr::PlacementPlan plan_for(const bprr::Scenario& s, bprr::Policy policy, int R) {
  return bprr::policy_placement(s.cluster, policy, s.options, s.workload.seed, R);
}

ordered_json route_json(const bprr::Cluster& c, const bprr::RouteAssignment& route) {
  ordered_json chain = ordered_json::array();
  for (std::size_t h = 0; h < route.servers.size(); ++h) {
    chain.push_back({{"server", c.servers[route.servers[h]].id}, {"blocks", route.blocks[h]}});
  }
  return chain;
}

int cmd_place(const Globals& g, const std::string& policy_name, std::optional<int> target) {
  const bprr::Scenario s = load(g);
  const bprr::Policy policy = policy_name.empty() ? s.policy : bprr::parse_policy(policy_name);
  const int R = target ? *target : bprr::resolve_target_requests(s.cluster, s.workload, s.options);
  const bprr::PlacementPlan plan = plan_for(s, policy, R);
  if (!plan.feasible) throw Error(ErrorCode::kPlacementInfeasible, "placement leaves a block unhosted");
  if (g.fmt() == Format::kCsv) {
    std::string text = "server,first,count\n";
    for (int j = 0; j < s.cluster.server_count(); ++j) {
      const bprr::BlockSpan& b = plan.placement.spans[j];
      text += s.cluster.servers[j].id + "," + std::to_string(b.first) + "," + std::to_string(b.count) + "\n";
    }
    write_output(g, text);
    return 0;
  }
  ordered_json j = bprr::placement_to_json(s.cluster, plan.placement);
  j["policy"] = bprr::to_string(policy);
  j["target_requests"] = R;
  j["covering_servers"] = plan.covering_servers;
  ordered_json order = ordered_json::array();
  for (int k : plan.order) order.push_back(s.cluster.servers[k].id);
  j["order"] = order;
  write_output(g, dump(j));
  return 0;
}

int cmd_route(const Globals& g, const std::string& client_id, const std::string& placement_path,
              int input_tokens, int output_tokens) {
  const bprr::Scenario s = load(g);
  const bprr::ModelSpec& m = s.cluster.model;
  int client = 0;
  if (!client_id.empty()) {
    client = s.cluster.client_index(client_id);
    if (client < 0) throw Error(ErrorCode::kValidation, "unknown client '" + client_id + "'");
  }
  bprr::Placement placement;
  if (placement_path.empty()) {
    const int R = bprr::resolve_target_requests(s.cluster, s.workload, s.options);
    placement = plan_for(s, s.policy, R).placement;
  } else {
    std::ifstream in(placement_path);
    if (!in) throw Error(ErrorCode::kIo, "cannot read '" + placement_path + "'");
    ordered_json doc;
    try {
      doc = ordered_json::parse(in);
    } catch (const ordered_json::parse_error& e) {
      throw Error(ErrorCode::kValidation, placement_path + ": " + e.what());
    }
    placement = bprr::placement_from_json(s.cluster, doc);
  }
  bprr::RouteDemand demand;
  demand.input_tokens = input_tokens > 0 ? input_tokens : m.max_input_tokens;
  demand.output_tokens = output_tokens > 0 ? output_tokens : m.max_output_tokens;
  demand.accounting = s.options.accounting;
  demand.all_token_cost = s.options.all_token_cost;
  if (demand.input_tokens > m.max_input_tokens || demand.output_tokens > m.max_output_tokens) {
    throw Error(ErrorCode::kValidation, "token counts exceed the model limits");
  }
  std::vector<bprr::ServerState> states;
  for (int j = 0; j < s.cluster.server_count(); ++j) {
    states.push_back(bprr::ServerState::for_server(s.cluster, placement, j, s.options.accounting));
  }
  const bprr::RoutingOutcome out = bprr::ws_route(s.cluster, placement, client, states, 0.0, demand);
  const bprr::Seconds total =
      bprr::total_request_time(s.cluster, placement, client, out.route.servers,
                               demand.input_tokens, demand.output_tokens);
  if (g.fmt() == Format::kCsv) {
    std::string text = "hop,server,blocks\n";
    for (std::size_t h = 0; h < out.route.servers.size(); ++h) {
      text += std::to_string(h) + "," + s.cluster.servers[out.route.servers[h]].id + "," +
              std::to_string(out.route.blocks[h]) + "\n";
    }
    write_output(g, text);
    return 0;
  }
  ordered_json j;
  j["client"] = s.cluster.clients[client].id;
  j["input_tokens"] = demand.input_tokens;
  j["output_tokens"] = demand.output_tokens;
  j["chain"] = route_json(s.cluster, out.route);
  j["path_cost"] = out.path_cost;
  j["total_time"] = total;
  j["per_token_time"] = total / demand.output_tokens;
  write_output(g, dump(j));
  return 0;
}

int cmd_simulate(const Globals& g, const std::string& policy_name, int runs, bool check,
                 bool serial, bool timing, bool per_run) {
  bprr::Scenario s = load(g);
  const bprr::Policy policy = policy_name.empty() ? s.policy : bprr::parse_policy(policy_name);
  if (check) s.options.check_invariants = true;
  const std::uint64_t seed = s.workload.seed;
  if (runs <= 1) {
    const bprr::SimReport r = bprr::run_simulation(s.cluster, s.workload, policy, s.options, seed);
    if (g.fmt() == Format::kCsv) {
      std::string text =
          "id,client,arrival,input_tokens,output_tokens,dropped,wait,ttft,total,hops\n";
      for (const bprr::RequestRecord& q : r.records) {
        text += q.id + "," + s.cluster.clients[q.client].id + "," + fmt_num(q.arrival) + "," +
                std::to_string(q.input_tokens) + "," + std::to_string(q.output_tokens) + "," +
                (q.dropped ? "1" : "0") + "," + fmt_num(q.wait) + "," + fmt_num(q.ttft) + "," +
                fmt_num(q.total) + "," + std::to_string(q.route.servers.size()) + "\n";
      }
      write_output(g, text);
    } else {
      write_output(g, dump(bprr::report_to_json(r, timing)));
    }
    return 0;
  }
  const bprr::MonteCarloReport mc = bprr::run_monte_carlo(
      s.cluster, s.workload, policy, s.options, runs, seed,
      serial ? bprr::Execution::kSerial : bprr::Execution::kParallel);
  if (g.fmt() == Format::kCsv) {
    write_output(g, bprr::monte_carlo_csv_header() + bprr::monte_carlo_csv_rows(mc));
  } else {
    write_output(g, dump(bprr::monte_carlo_to_json(mc, per_run, timing)));
  }
  return 0;
}

int cmd_bound(const Globals& g, std::optional<int> target) {
  const bprr::Scenario s = load(g);
  const int R = target ? *target : bprr::resolve_target_requests(s.cluster, s.workload, s.options);
  const bprr::PlacementPlan plan = bprr::cg_block_placement(s.cluster, R, placement_basis(s));
  const std::vector<bprr::Request> requests =
      bprr::generate_requests(s.cluster, s.workload, s.workload.seed);
  const double upper = bprr::cg_upper_bound(s.cluster, plan);
  const double lower = bprr::weighted_lower_bound(s.cluster, requests, plan.basis);
  const double ratio = upper / lower;
  if (g.fmt() == Format::kJson) {
    write_output(g, dump(ordered_json{
                        {"target_requests", R}, {"upper", upper}, {"lower", lower}, {"ratio", ratio}}));
  } else if (g.fmt() == Format::kCsv) {
    write_output(g, "upper,lower,ratio\n" + fmt_num(upper) + "," + fmt_num(lower) + "," +
                        fmt_num(ratio) + "\n");
  } else {
    write_output(g, fmt_num(upper) + " " + fmt_num(lower) + " " + fmt_num(ratio) + "\n");
  }
  return 0;
}

std::vector<bprr::Request> first_requests(const bprr::Scenario& s, int limit) {
  std::vector<bprr::Request> requests =
      bprr::generate_requests(s.cluster, s.workload, s.workload.seed);
  if (limit > 0 && static_cast<int>(requests.size()) > limit) requests.resize(limit);
  return requests;
}

int cmd_exact(const Globals& g, int limit, bool heterogeneous, bool serial) {
  const bprr::Scenario s = load(g);
  const std::vector<bprr::Request> requests = first_requests(s, limit);
  bprr::ExactOptions options;
  options.heterogeneous = heterogeneous;
  options.execution = serial ? bprr::Execution::kSerial : bprr::Execution::kParallel;
  const bprr::ExactSolution sol = bprr::solve_exact(s.cluster, requests, options);
  ordered_json j = bprr::placement_to_json(s.cluster, sol.placement);
  j["objective"] = sol.objective;
  j["average"] = sol.average(requests.size());
  ordered_json routes = ordered_json::array();
  for (std::size_t r = 0; r < requests.size(); ++r) {
    routes.push_back({{"request", requests[r].id}, {"chain", route_json(s.cluster, sol.routes[r])}});
  }
  j["routes"] = routes;
  j["placements_visited"] = sol.placements_visited;
  j["assignments_visited"] = sol.assignments_visited;
  if (g.fmt() == Format::kCsv) {
    write_output(g, "objective,average\n" + fmt_num(sol.objective) + "," +
                        fmt_num(sol.average(requests.size())) + "\n");
  } else {
    write_output(g, dump(j));
  }
  return 0;
}

int cmd_emit_milp(const Globals& g, int limit, bool heterogeneous) {
  const bprr::Scenario s = load(g);
  const std::vector<bprr::Request> requests = first_requests(s, limit);
  bprr::MilpOptions options;
  options.heterogeneous = heterogeneous;
  if (g.out.empty()) {
    bprr::emit_milp(s.cluster, requests, std::cout, options);
  } else {
    bprr::emit_milp(s.cluster, requests, std::filesystem::path(g.out), options);
  }
  return 0;
}

struct CompareCell {
  double rate;
  int output_tokens;
  bprr::MonteCarloReport report;
};

const bprr::MetricStats& metric(const bprr::MonteCarloReport& r, const std::string& name) {
  if (name == "avg_ttft") return r.avg_ttft;
  if (name == "avg_per_remaining") return r.avg_per_remaining;
  if (name == "avg_wait") return r.avg_wait;
  if (name == "dropped") return r.dropped;
  return r.avg_per_token;
}

int cmd_compare(const Globals& g, const std::string& rates_text, const std::string& outputs_text,
                const std::string& policies_text, int runs) {
  const bprr::Scenario s = load(g);
  std::vector<double> rates;
  for (const std::string& r : split(rates_text)) rates.push_back(std::stod(r));
  std::vector<int> outputs;
  for (const std::string& o : split(outputs_text)) outputs.push_back(std::stoi(o));
  std::vector<bprr::Policy> policies;
  for (const std::string& p : split(policies_text)) policies.push_back(bprr::parse_policy(p));
  if (rates.empty() || outputs.empty() || policies.empty() || runs < 1) {
    throw Error(ErrorCode::kValidation, "compare needs rates, outputs, policies and runs >= 1");
  }

  std::vector<CompareCell> cells;
  for (double rate : rates) {
    for (int lout : outputs) {
      const bprr::Scenario cell = bprr::sweep_cell(s, rate, lout);
      for (bprr::Policy p : policies) {
        cells.push_back({rate, lout, bprr::run_monte_carlo(cell.cluster, cell.workload, p,
                                                           cell.options, runs, cell.workload.seed)});
      }
    }
  }

  const char* metrics[] = {"avg_per_token", "avg_ttft", "avg_per_remaining", "avg_wait", "dropped"};
  if (g.fmt() == Format::kCsv) {
    std::string text = "rate,output_tokens,policy,metric,mean,std,runs\n";
    for (const CompareCell& c : cells) {
      for (const char* name : metrics) {
        const bprr::MetricStats& st = metric(c.report, name);
        text += fmt_num(c.rate) + "," + std::to_string(c.output_tokens) + "," +
                bprr::to_string(c.report.policy) + "," + name + "," + fmt_num(st.mean) + "," +
                fmt_num(st.std) + "," + std::to_string(c.report.runs) + "\n";
      }
    }
    write_output(g, text);
    return 0;
  }
  if (g.fmt() == Format::kJson) {
    ordered_json arr = ordered_json::array();
    for (const CompareCell& c : cells) {
      ordered_json j = bprr::monte_carlo_to_json(c.report);
      j["rate"] = c.rate;
      j["output_tokens"] = c.output_tokens;
      arr.push_back(std::move(j));
    }
    write_output(g, dump(arr));
    return 0;
  }

  // Grid: one block per metric, policies as rows, (rate, output length) cells as columns.
  std::ostringstream os;
  for (const char* name : {"avg_per_token", "avg_ttft", "avg_per_remaining"}) {
    os << name << " (s)\n";
    os << std::left << std::setw(18) << "policy";
    for (double rate : rates) {
      for (int lout : outputs) {
        std::ostringstream head;
        head << rate << "/s l=" << lout;
        os << std::right << std::setw(16) << head.str();
      }
    }
    os << "\n";
    for (bprr::Policy p : policies) {
      os << std::left << std::setw(18) << bprr::to_string(p);
      for (const CompareCell& c : cells) {
        if (c.report.policy != p) continue;
        std::ostringstream v;
        v << std::fixed << std::setprecision(3) << metric(c.report, name).mean;
        os << std::right << std::setw(16) << v.str();
      }
      os << "\n";
    }
    os << "\n";
  }
  write_output(g, os.str());
  return 0;
}

int cmd_validate(const Globals& g) {
  bprr::Scenario s = load(g);
  const bprr::Cluster& c = s.cluster;
  const bprr::ModelSpec& m = c.model;
  std::vector<std::pair<std::string, bool>> checks;
  checks.emplace_back("cluster", true);

  const int R = bprr::resolve_target_requests(c, s.workload, s.options);
  const bprr::PlacementPlan plan = bprr::cg_block_placement(c, R, placement_basis(s));
  checks.emplace_back("coverage", plan.feasible && plan.placement.covers(m.blocks));

  bool memory = true;
  bool capacity = true;
  for (int j = 0; j < c.server_count(); ++j) {
    const int mj = plan.placement.spans[j].count;
    if (mj == 0) continue;
    memory = memory && m.block_bytes * mj + m.cache_bytes() * R * mj <= c.servers[j].memory;
    capacity = capacity && bprr::server_capacity(m, c.servers[j], mj) >= R;
  }
  checks.emplace_back("worst_case_memory", memory);
  checks.emplace_back("server_capacity", capacity);

  bool tiling = true;
  int next = 1;
  for (int k = 0; k < plan.covering_servers; ++k) {
    const bprr::BlockSpan& b = plan.placement.spans[plan.order[k]];
    const bool last = k + 1 == plan.covering_servers;
    tiling = tiling && b.first == (last ? m.blocks - b.count + 1 : next);
    next += b.count;
  }
  checks.emplace_back("sequential_tiling", tiling);

  bool routes = true;
  for (int client = 0; client < c.client_count(); ++client) {
    const bprr::RouteAssignment r = bprr::offline_route(c, plan.placement, client, plan.basis);
    routes = routes && bprr::path_feasible(plan.placement, m.blocks, r.servers);
  }
  checks.emplace_back("route_feasibility", routes);

  s.options.check_invariants = true;
  bool simulation = true;
  try {
    const bprr::SimReport r = bprr::run_simulation(c, s.workload, s.policy, s.options, s.workload.seed);
    simulation = r.summary.completed + r.summary.dropped == r.summary.requests;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInvariantViolated && e.code() != ErrorCode::kCapacityViolated) throw;
    simulation = false;
  }
  checks.emplace_back("simulation_invariants", simulation);

  bool ok = true;
  std::string text;
  if (g.fmt() == Format::kJson) {
    ordered_json j = ordered_json::object();
    for (const auto& [name, pass] : checks) j[name] = pass;
    text = dump(j);
  } else {
    for (const auto& [name, pass] : checks) text += (pass ? "PASS " : "FAIL ") + name + "\n";
  }
  for (const auto& [name, pass] : checks) ok = ok && pass;
  write_output(g, text);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block placement and request routing for pipeline-parallel LLM inference"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Override the workload seed");
  app.add_option("--out", g.out, "Write output to this file instead of stdout");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  auto scenario_option = [&g](CLI::App* sub) {
    sub->add_option("-s,--scenario", g.scenario, "Scenario JSON file")->required();
  };

  std::string policy;
  std::optional<int> target;
  auto* place = app.add_subcommand("place", "Compute a block placement");
  scenario_option(place);
  place->add_option("--policy", policy, "Placement policy (default: the scenario's)");
  place->add_option("-R,--target", target, "Target concurrent requests")->check(CLI::PositiveNumber);

  std::string client, placement_file;
  int input_tokens = 0, output_tokens = 0;
  auto* route = app.add_subcommand("route", "Route one request on an idle cluster");
  scenario_option(route);
  route->add_option("--client", client, "Client id (default: the first)");
  route->add_option("--placement", placement_file, "Placement JSON (default: the scenario policy's)");
  route->add_option("--input", input_tokens, "Input tokens (default: model maximum)");
  route->add_option("--output", output_tokens, "Output tokens (default: model maximum)");

  int runs = 1;
  bool check = false, serial = false, timing = false, per_run = false;
  auto* simulate = app.add_subcommand("simulate", "Replay the scenario workload");
  scenario_option(simulate);
  simulate->add_option("--policy", policy, "Policy (default: the scenario's)");
  simulate->add_option("--runs", runs, "Monte Carlo runs")->check(CLI::PositiveNumber);
  simulate->add_flag("--check-invariants", check, "Assert the memory invariant after every event");
  simulate->add_flag("--serial", serial, "Run Monte Carlo replicas on one thread");
  simulate->add_flag("--timing", timing, "Include wall-clock decision time");
  simulate->add_flag("--per-run", per_run, "Include every run's report");

  auto* bound = app.add_subcommand("bound", "Print upper bound, lower bound and their ratio");
  scenario_option(bound);
  bound->add_option("-R,--target", target, "Target concurrent requests")->check(CLI::PositiveNumber);

  int limit = 0;
  bool heterogeneous = false;
  auto* exact = app.add_subcommand("exact", "Solve a tiny instance to optimality");
  scenario_option(exact);
  exact->add_option("--requests", limit, "Use only the first N workload requests");
  exact->add_flag("--heterogeneous", heterogeneous, "Per-request cache sizes and lengths");
  exact->add_flag("--serial", serial, "Enumerate placements on one thread");

  auto* milp = app.add_subcommand("emit-milp", "Write the joint placement and routing MILP");
  scenario_option(milp);
  milp->add_option("--requests", limit, "Use only the first N workload requests");
  milp->add_flag("--heterogeneous", heterogeneous, "Per-request cache sizes and lengths");

  std::string rates = "0.1,0.5", outputs = "64,128", policies = "petals,proposed";
  int compare_runs = 20;
  auto* compare = app.add_subcommand("compare", "Sweep policies over rates and output lengths");
  scenario_option(compare);
  compare->add_option("--rates", rates, "Comma-separated arrival rates");
  compare->add_option("--outputs", outputs, "Comma-separated output lengths");
  compare->add_option("--policies", policies, "Comma-separated policies");
  compare->add_option("--runs", compare_runs, "Monte Carlo runs per cell")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Check placement, routing and simulator invariants");
  scenario_option(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (place->parsed()) return cmd_place(g, policy, target);
    if (route->parsed()) return cmd_route(g, client, placement_file, input_tokens, output_tokens);
    if (simulate->parsed()) return cmd_simulate(g, policy, runs, check, serial, timing, per_run);
    if (bound->parsed()) return cmd_bound(g, target);
    if (exact->parsed()) return cmd_exact(g, limit, heterogeneous, serial);
    if (milp->parsed()) return cmd_emit_milp(g, limit, heterogeneous);
    if (compare->parsed()) return cmd_compare(g, rates, outputs, policies, compare_runs);
    if (validate->parsed()) return cmd_validate(g);
  } catch (const Error& e) {
    std::cerr << "bprr: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "bprr: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
