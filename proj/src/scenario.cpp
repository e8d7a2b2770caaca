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

#include "bprr/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "bprr/error.hpp"

namespace bprr {

namespace {

using nlohmann::ordered_json;

// A JSON value that remembers where it came from, for error messages.
class Field {
 public:
  Field(const ordered_json& value, std::string path) : v_(&value), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const ordered_json& raw() const { return *v_; }
  bool has(const char* key) const { return v_->is_object() && v_->contains(key); }

  Field at(const char* key) const {
    if (!v_->is_object()) fail("expected an object");
    const auto it = v_->find(key);
    if (it == v_->end()) throw Error(ErrorCode::kValidation, path_ + "/" + key + ": missing");
    return Field(*it, path_ + "/" + key);
  }
  Field at(std::size_t i) const { return Field(v_->at(i), path_ + "/" + std::to_string(i)); }
  std::size_t size() const {
    if (!v_->is_array()) fail("expected an array");
    return v_->size();
  }
  std::vector<std::pair<std::string, Field>> members() const {
    if (!v_->is_object()) fail("expected an object");
    std::vector<std::pair<std::string, Field>> out;
    for (auto it = v_->begin(); it != v_->end(); ++it) {
      out.emplace_back(it.key(), Field(it.value(), path_ + "/" + it.key()));
    }
    return out;
  }

  double number() const {
    if (!v_->is_number()) fail("expected a number");
    const double d = v_->get<double>();
    if (!std::isfinite(d)) fail("expected a finite number");
    return d;
  }
  std::int64_t integer() const {
    if (v_->is_number_integer()) return v_->get<std::int64_t>();
    const double d = number();
    if (std::abs(d) > 9.0e18) fail("integer out of range");
    return static_cast<std::int64_t>(std::floor(d));
  }
  int small_int() const {
    const std::int64_t i = integer();
    if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
      fail("integer out of range");
    }
    return static_cast<int>(i);
  }
  std::string string() const {
    if (!v_->is_string()) fail("expected a string");
    return v_->get<std::string>();
  }
  bool boolean() const {
    if (!v_->is_boolean()) fail("expected true or false");
    return v_->get<bool>();
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kValidation, (path_.empty() ? "/" : path_) + ": " + what);
  }

 private:
  const ordered_json* v_;
  std::string path_;
};

double number_or(const Field& f, const char* key, double fallback) {
  return f.has(key) ? f.at(key).number() : fallback;
}
std::int64_t integer_or(const Field& f, const char* key, std::int64_t fallback) {
  return f.has(key) ? f.at(key).integer() : fallback;
}
int int_or(const Field& f, const char* key, int fallback) {
  return f.has(key) ? f.at(key).small_int() : fallback;
}
bool bool_or(const Field& f, const char* key, bool fallback) {
  return f.has(key) ? f.at(key).boolean() : fallback;
}

Affine parse_affine(const Field& f) {
  if (f.raw().is_number()) return Affine{f.number(), 0.0};
  return Affine{number_or(f, "base", 0.0), number_or(f, "per_token", 0.0)};
}

ordered_json affine_json(const Affine& a) { return {{"base", a.base}, {"per_token", a.per_token}}; }

ModelSpec parse_model(const Field& f, const ModelSpec& defaults, bool require_core) {
  if (require_core) {
    for (const char* key : {"blocks", "block_bytes", "max_input_tokens", "max_output_tokens"}) {
      (void)f.at(key);
    }
    if (!f.has("d_model") && !f.has("cache_bytes")) f.fail("needs d_model or cache_bytes");
  }
  ModelSpec m = defaults;
  m.blocks = int_or(f, "blocks", m.blocks);
  m.d_model = integer_or(f, "d_model", m.d_model);
  m.dtype_bytes = integer_or(f, "dtype_bytes", m.dtype_bytes);
  m.block_bytes = integer_or(f, "block_bytes", m.block_bytes);
  m.max_input_tokens = int_or(f, "max_input_tokens", m.max_input_tokens);
  m.max_output_tokens = int_or(f, "max_output_tokens", m.max_output_tokens);
  m.max_sequence_length = int_or(f, "max_sequence_length", m.max_sequence_length);
  if (f.has("cache_bytes")) m.cache_bytes_override = f.at("cache_bytes").integer();
  return m;
}

ordered_json model_json(const ModelSpec& m) {
  ordered_json j = {{"blocks", m.blocks},
                    {"d_model", m.d_model},
                    {"dtype_bytes", m.dtype_bytes},
                    {"block_bytes", m.block_bytes},
                    {"max_input_tokens", m.max_input_tokens},
                    {"max_output_tokens", m.max_output_tokens},
                    {"max_sequence_length", m.max_sequence_length}};
  if (m.cache_bytes_override) j["cache_bytes"] = *m.cache_bytes_override;
  return j;
}

HardwareClass parse_hardware(const Field& f, const HardwareClass& defaults) {
  HardwareClass h = defaults;
  h.memory = integer_or(f, "memory", h.memory);
  h.tau = number_or(f, "tau", h.tau);
  if (f.has("tau_prefill")) h.tau_prefill = parse_affine(f.at("tau_prefill"));
  return h;
}

LinkTiming parse_timing(const Field& f, const LinkTiming& defaults) {
  return {number_or(f, "overhead", defaults.overhead),
          number_or(f, "bytes_per_token", defaults.bytes_per_token)};
}

// Wraps a validation failure with the document location it concerns.
template <typename Fn>
void validated(const std::string& where, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kValidation) throw;
    throw Error(ErrorCode::kValidation, where + ": " + e.what());
  }
}

Cluster parse_cluster_fields(const Field& root) {
  Cluster c;
  c.model = parse_model(root.at("model"), ModelSpec{}, true);
  const Field servers = root.at("servers");
  for (std::size_t i = 0; i < servers.size(); ++i) {
    const Field s = servers.at(i);
    ServerSpec spec;
    spec.id = s.at("id").string();
    spec.memory = s.at("memory").integer();
    spec.tau = s.at("tau").number();
    spec.tau_prefill = s.has("tau_prefill") ? parse_affine(s.at("tau_prefill")) : Affine{spec.tau, 0.0};
    c.servers.push_back(std::move(spec));
  }
  const Field clients = root.at("clients");
  for (std::size_t i = 0; i < clients.size(); ++i) {
    const Field cf = clients.at(i);
    ClientSpec cl;
    cl.id = cf.at("id").string();
    cl.rtt.assign(c.servers.size(), 0.0);
    cl.rtt_prefill.assign(c.servers.size(), Affine{});
    std::vector<char> seen(c.servers.size(), 0);
    for (const auto& [sid, value] : cf.at("rtt").members()) {
      const int j = c.server_index(sid);
      if (j < 0) value.fail("unknown server '" + sid + "'");
      cl.rtt[j] = value.number();
      seen[j] = 1;
    }
    for (std::size_t j = 0; j < c.servers.size(); ++j) {
      if (!seen[j]) {
        cf.at("rtt").fail("missing rtt for client '" + cl.id + "' to server '" + c.servers[j].id + "'");
      }
      cl.rtt_prefill[j] = Affine{cl.rtt[j], 0.0};
    }
    if (cf.has("rtt_prefill")) {
      for (const auto& [sid, value] : cf.at("rtt_prefill").members()) {
        const int j = c.server_index(sid);
        if (j < 0) value.fail("unknown server '" + sid + "'");
        cl.rtt_prefill[j] = parse_affine(value);
      }
    }
    c.clients.push_back(std::move(cl));
  }
  if (root.has("forbidden_links")) {
    const Field links = root.at("forbidden_links");
    for (std::size_t i = 0; i < links.size(); ++i) {
      const Field l = links.at(i);
      const int a = c.server_index(l.at(std::size_t{0}).string());
      const int b = c.server_index(l.at(std::size_t{1}).string());
      if (a < 0 || b < 0) l.fail("unknown server in forbidden link");
      c.forbidden_links.emplace_back(a, b);
    }
  }
  validated(root.path().empty() ? "/" : root.path(), [&] { c.validate(); });
  return c;
}

ClusteredPreset parse_clustered(const Field& f) {
  ClusteredPreset p = default_clustered_preset();
  if (f.has("model")) p.model = parse_model(f.at("model"), p.model, false);
  if (f.has("fast")) p.fast = parse_hardware(f.at("fast"), p.fast);
  if (f.has("slow")) p.slow = parse_hardware(f.at("slow"), p.slow);
  p.fast_servers = int_or(f, "fast_servers", p.fast_servers);
  p.slow_servers = int_or(f, "slow_servers", p.slow_servers);
  if (f.has("client_clusters")) {
    p.client_clusters.clear();
    const Field cc = f.at("client_clusters");
    for (std::size_t i = 0; i < cc.size(); ++i) p.client_clusters.push_back(cc.at(i).small_int());
  }
  p.intra_rtt = number_or(f, "intra_rtt", p.intra_rtt);
  p.intra_bandwidth_bps = number_or(f, "intra_bandwidth_bps", p.intra_bandwidth_bps);
  p.inter_rtt = number_or(f, "inter_rtt", p.inter_rtt);
  p.inter_bandwidth_bps = number_or(f, "inter_bandwidth_bps", p.inter_bandwidth_bps);
  p.timing = parse_timing(f, p.timing);
  return p;
}

Cluster parse_preset(const Field& f, const std::filesystem::path& base_dir) {
  const std::string kind = f.at("kind").string();
  if (kind == "clustered") {
    Cluster c;
    validated(f.path(), [&] { c = generate_clustered(parse_clustered(f)); });
    return c;
  }
  if (kind == "scattered") {
    const ClusteredPreset base = default_clustered_preset();
    ScatteredPreset p;
    p.model = f.has("model") ? parse_model(f.at("model"), base.model, false) : base.model;
    p.fast = f.has("fast") ? parse_hardware(f.at("fast"), base.fast) : base.fast;
    p.slow = f.has("slow") ? parse_hardware(f.at("slow"), base.slow) : base.slow;
    p.servers = int_or(f, "servers", p.servers);
    p.fast_fraction = number_or(f, "fast_fraction", p.fast_fraction);
    p.seed = static_cast<std::uint64_t>(integer_or(f, "seed", static_cast<std::int64_t>(p.seed)));
    p.bandwidth_bps = number_or(f, "bandwidth_bps", p.bandwidth_bps);
    p.timing = parse_timing(f, base.timing);
    std::filesystem::path topo = f.at("topology").string();
    if (topo.is_relative() && !base_dir.empty()) topo = base_dir / topo;
    Cluster c;
    validated(f.path(), [&] { c = generate_scattered(load_topology(topo), p).cluster; });
    return c;
  }
  f.at("kind").fail("unknown preset kind '" + kind + "'");
}

LengthModel parse_lengths(const Field& f) {
  LengthModel l;
  auto range = [&f](const char* key, int& lo, int& hi) {
    if (!f.has(key)) return;
    const Field r = f.at(key);
    if (r.raw().is_array()) {
      if (r.size() != 2) r.fail("expected [min, max]");
      lo = r.at(std::size_t{0}).small_int();
      hi = r.at(std::size_t{1}).small_int();
    } else {
      lo = hi = r.small_int();
    }
  };
  range("input", l.input_min, l.input_max);
  range("output", l.output_min, l.output_max);
  return l;
}

WorkloadSpec parse_workload(const Field& f, const Cluster& cluster) {
  WorkloadSpec w;
  w.rate = number_or(f, "rate", w.rate);
  w.count = int_or(f, "count", w.count);
  w.seed = static_cast<std::uint64_t>(integer_or(f, "seed", static_cast<std::int64_t>(w.seed)));
  if (f.has("clients")) {
    const Field cs = f.at("clients");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const int c = cluster.client_index(cs.at(i).string());
      if (c < 0) cs.at(i).fail("unknown client");
      w.clients.push_back(c);
    }
  }
  if (f.has("lengths")) w.lengths = parse_lengths(f.at("lengths"));
  if (f.has("trace")) {
    const Field t = f.at("trace");
    for (std::size_t i = 0; i < t.size(); ++i) w.trace.push_back(t.at(i).number());
  }
  validated(f.path(), [&] { w.validate(cluster.model, cluster.client_count()); });
  return w;
}

void parse_policy_fields(const Field& f, Scenario& s) {
  if (f.has("name")) {
    const Field name = f.at("name");
    validated(name.path(), [&] { s.policy = parse_policy(name.string()); });
  }
  SimOptions& o = s.options;
  if (f.has("target_requests")) {
    o.target_requests = f.at("target_requests").small_int();
    if (*o.target_requests < 1) f.at("target_requests").fail("must be >= 1");
  }
  if (f.has("accounting")) {
    const std::string a = f.at("accounting").string();
    if (a == "slots") o.accounting = CacheAccounting::kSlots;
    else if (a == "bytes") o.accounting = CacheAccounting::kBytes;
    else f.at("accounting").fail("expected \"slots\" or \"bytes\"");
  }
  o.reserve = bool_or(f, "reserve", o.reserve);
  o.retry_backoff = bool_or(f, "retry_backoff", o.retry_backoff);
  o.max_backoff = number_or(f, "max_backoff", o.max_backoff);
  o.petals_cache_sessions = int_or(f, "petals_cache_sessions", o.petals_cache_sessions);
  o.check_invariants = bool_or(f, "check_invariants", o.check_invariants);
  o.all_token_cost = bool_or(f, "all_token_cost", o.all_token_cost);
  o.exact_path_budget =
      static_cast<std::size_t>(integer_or(f, "exact_path_budget", static_cast<std::int64_t>(o.exact_path_budget)));
  if (o.petals_cache_sessions < 1) f.at("petals_cache_sessions").fail("must be >= 1");
  if (!(o.max_backoff > 0.0)) f.at("max_backoff").fail("must be positive");
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

ClusteredPreset default_clustered_preset() {
  ClusteredPreset p;
  p.model.blocks = 70;
  p.model.d_model = 14336;
  p.model.dtype_bytes = 2;
  p.model.block_bytes = 1'360'000'000;
  p.model.max_input_tokens = 20;
  p.model.max_output_tokens = 128;
  p.model.max_sequence_length = 2048;
  p.fast = HardwareClass{76'000'000'000, 0.010, Affine{0.012, 0.0002}};
  p.slow = HardwareClass{6'500'000'000, 0.040, Affine{0.045, 0.0008}};
  p.timing = LinkTiming{0.020, 0.0};
  return p;
}

Cluster generate_clustered(const ClusteredPreset& preset) {
  if (preset.fast_servers < 0 || preset.slow_servers < 0) {
    throw Error(ErrorCode::kValidation, "server counts must be non-negative");
  }
  Cluster c;
  c.model = preset.model;
  std::vector<int> location;
  for (int k = 0; k < preset.fast_servers; ++k) {
    c.servers.push_back({"fast" + std::to_string(k), preset.fast.memory, preset.fast.tau,
                         preset.fast.tau_prefill});
    location.push_back(1);
  }
  for (int k = 0; k < preset.slow_servers; ++k) {
    c.servers.push_back({"slow" + std::to_string(k), preset.slow.memory, preset.slow.tau,
                         preset.slow.tau_prefill});
    location.push_back(2);
  }
  for (std::size_t i = 0; i < preset.client_clusters.size(); ++i) {
    const int home = preset.client_clusters[i];
    if (home < 0 || home > 2) throw Error(ErrorCode::kValidation, "client cluster must be 0, 1 or 2");
    ClientSpec cl;
    cl.id = "client" + std::to_string(i) + "@cluster" + std::to_string(home);
    for (int where : location) {
      const bool local = where == home;
      double t = 0.0;
      Affine prefill;
      set_link(c.model, preset.timing, local ? preset.intra_rtt : preset.inter_rtt,
               local ? preset.intra_bandwidth_bps : preset.inter_bandwidth_bps, t, prefill);
      cl.rtt.push_back(t);
      cl.rtt_prefill.push_back(prefill);
    }
    c.clients.push_back(std::move(cl));
  }
  c.validate();
  return c;
}

Scenario parse_scenario(const ordered_json& doc, const std::filesystem::path& base_dir) {
  const Field root(doc, "");
  if (!doc.is_object()) root.fail("scenario must be a JSON object");
  Scenario s;
  if (root.has("preset")) {
    if (root.has("servers") || root.has("clients")) {
      root.fail("a preset replaces servers and clients; give one or the other");
    }
    s.cluster = parse_preset(root.at("preset"), base_dir);
  } else {
    s.cluster = parse_cluster_fields(root);
  }
  s.workload = root.has("workload") ? parse_workload(root.at("workload"), s.cluster) : WorkloadSpec{};
  if (!root.has("workload")) s.workload.validate(s.cluster.model, s.cluster.client_count());
  if (root.has("policy")) parse_policy_fields(root.at("policy"), s);
  return s;
}

Scenario sweep_cell(const Scenario& base, double rate, int output_tokens) {
  Scenario s = base;
  ModelSpec& m = s.cluster.model;
  m.max_output_tokens = std::max(m.max_output_tokens, output_tokens);
  s.cluster.validate();
  s.workload.rate = rate;
  s.workload.trace.clear();
  s.workload.lengths.output_min = s.workload.lengths.output_max = output_tokens;
  s.workload.validate(m, s.cluster.client_count());
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read scenario '" + path.string() + "'");
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::kValidation, path.string() + ": " + e.what());
  }
  return parse_scenario(doc, path.parent_path());
}

ordered_json cluster_to_json(const Cluster& cluster) {
  ordered_json j;
  j["model"] = model_json(cluster.model);
  j["servers"] = ordered_json::array();
  for (const ServerSpec& s : cluster.servers) {
    j["servers"].push_back({{"id", s.id},
                            {"memory", s.memory},
                            {"tau", s.tau},
                            {"tau_prefill", affine_json(s.tau_prefill)}});
  }
  j["clients"] = ordered_json::array();
  for (const ClientSpec& c : cluster.clients) {
    ordered_json rtt = ordered_json::object();
    ordered_json prefill = ordered_json::object();
    for (std::size_t k = 0; k < cluster.servers.size(); ++k) {
      rtt[cluster.servers[k].id] = c.rtt[k];
      prefill[cluster.servers[k].id] = affine_json(c.rtt_prefill[k]);
    }
    j["clients"].push_back({{"id", c.id}, {"rtt", rtt}, {"rtt_prefill", prefill}});
  }
  j["forbidden_links"] = ordered_json::array();
  for (const auto& [a, b] : cluster.forbidden_links) {
    j["forbidden_links"].push_back({cluster.servers[a].id, cluster.servers[b].id});
  }
  return j;
}

Cluster cluster_from_json(const ordered_json& doc) { return parse_cluster_fields(Field(doc, "")); }

ordered_json placement_to_json(const Cluster& cluster, const Placement& placement) {
  ordered_json arr = ordered_json::array();
  for (int j = 0; j < placement.size(); ++j) {
    arr.push_back({{"server", cluster.servers.at(j).id},
                   {"first", placement.spans[j].first},
                   {"count", placement.spans[j].count}});
  }
  return {{"placement", arr}};
}

Placement placement_from_json(const Cluster& cluster, const ordered_json& doc) {
  const Field root(doc, "");
  const Field arr = root.at("placement");
  Placement p;
  p.spans.assign(cluster.servers.size(), BlockSpan{});
  std::vector<char> seen(cluster.servers.size(), 0);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const Field e = arr.at(i);
    const int j = cluster.server_index(e.at("server").string());
    if (j < 0) e.at("server").fail("unknown server");
    if (seen[j]) e.at("server").fail("server listed twice");
    seen[j] = 1;
    p.spans[j] = BlockSpan{e.at("first").small_int(), e.at("count").small_int()};
  }
  if (!p.well_formed(cluster.model.blocks)) arr.fail("spans must lie within the model's blocks");
  return p;
}

ordered_json report_to_json(const SimReport& r, bool include_timing) {
  ordered_json j;
  j["policy"] = to_string(r.policy);
  j["seed"] = r.seed;
  j["target_requests"] = r.target_requests;
  j["placement_feasible"] = r.placement_feasible;
  j["upper_bound"] = r.upper_bound;
  ordered_json spans = ordered_json::array();
  for (const BlockSpan& s : r.placement.spans) spans.push_back({s.first, s.count});
  j["placement"] = spans;
  j["summary"] = {{"requests", r.summary.requests},
                  {"completed", r.summary.completed},
                  {"dropped", r.summary.dropped},
                  {"avg_per_token", r.summary.avg_per_token},
                  {"avg_ttft", r.summary.avg_ttft},
                  {"avg_per_remaining", r.summary.avg_per_remaining},
                  {"avg_wait", r.summary.avg_wait},
                  {"max_concurrent", r.summary.max_concurrent}};
  j["events"] = r.events;
  if (include_timing) j["decision_seconds"] = r.decision_seconds;
  ordered_json reqs = ordered_json::array();
  for (const RequestRecord& q : r.records) {
    ordered_json e = {{"id", q.id},
                      {"client", q.client},
                      {"arrival", q.arrival},
                      {"input_tokens", q.input_tokens},
                      {"output_tokens", q.output_tokens},
                      {"dropped", q.dropped}};
    if (!q.dropped) {
      e["wait"] = q.wait;
      e["ttft"] = q.ttft;
      e["total"] = q.total;
      e["chain"] = q.route.servers;
      e["blocks"] = q.route.blocks;
      e["path_cost"] = q.path_cost;
      e["completion_estimate"] = q.completion_estimate;
      e["concurrent"] = q.concurrent;
      e["offline_route"] = q.offline_route;
      e["reroutes"] = q.reroutes;
    }
    reqs.push_back(std::move(e));
  }
  j["requests"] = std::move(reqs);
  return j;
}

ordered_json monte_carlo_to_json(const MonteCarloReport& r, bool include_runs,
                                 bool include_timing) {
  auto stats = [](const MetricStats& s) { return ordered_json{{"mean", s.mean}, {"std", s.std}}; };
  ordered_json j;
  j["policy"] = to_string(r.policy);
  j["runs"] = r.runs;
  j["seed"] = r.seed;
  j["target_requests"] = r.target_requests;
  j["avg_per_token"] = stats(r.avg_per_token);
  j["avg_ttft"] = stats(r.avg_ttft);
  j["avg_per_remaining"] = stats(r.avg_per_remaining);
  j["avg_wait"] = stats(r.avg_wait);
  j["dropped"] = stats(r.dropped);
  if (include_timing) j["decision_seconds"] = r.decision_seconds;
  if (include_runs) {
    j["reports"] = ordered_json::array();
    for (const SimReport& rep : r.reports) j["reports"].push_back(report_to_json(rep, include_timing));
  }
  return j;
}

std::string monte_carlo_csv_header() { return "policy,metric,mean,std,runs\n"; }

std::string monte_carlo_csv_rows(const MonteCarloReport& r) {
  std::ostringstream os;
  const std::pair<const char*, const MetricStats*> rows[] = {
      {"avg_per_token", &r.avg_per_token},         {"avg_ttft", &r.avg_ttft},
      {"avg_per_remaining", &r.avg_per_remaining}, {"avg_wait", &r.avg_wait},
      {"dropped", &r.dropped}};
  for (const auto& [name, s] : rows) {
    os << to_string(r.policy) << ',' << name << ',' << format_number(s->mean) << ','
       << format_number(s->std) << ',' << r.runs << '\n';
  }
  return os.str();
}

}  // namespace bprr
