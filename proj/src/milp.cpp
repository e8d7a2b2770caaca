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

#include "bprr/milp.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "bprr/error.hpp"
#include "bprr/topology.hpp"

namespace bprr {

namespace {

struct Expr {
  std::map<std::string, double> terms;
  double constant = 0.0;

  Expr& add(const std::string& var, double coef) {
    terms[var] += coef;
    return *this;
  }
  Expr& add(const Expr& other, double coef) {
    for (const auto& [var, c] : other.terms) terms[var] += coef * c;
    constant += coef * other.constant;
    return *this;
  }
  Expr& shift(double c) {
    constant += c;
    return *this;
  }
};

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void expression(const std::map<std::string, double>& terms) {
    int on_line = 0;
    bool first = true;
    for (const auto& [var, c] : terms) {
      if (c == 0.0) continue;
      if (on_line == 6) {
        out_ << "\n   ";
        on_line = 0;
      }
      out_ << (c < 0 ? " - " : (first ? " " : " + ")) << number(std::abs(c)) << ' ' << var;
      first = false;
      ++on_line;
    }
    if (first) out_ << " 0 " << (terms.empty() ? std::string("a_v0") : terms.begin()->first);
  }

  void row(const std::string& name, const Expr& e, const char* sense, double rhs) {
    out_ << ' ' << name << ':';
    expression(e.terms);
    out_ << ' ' << sense << ' ' << number(rhs - e.constant) << '\n';
  }

 private:
  std::ostream& out_;
};

class Formulation {
 public:
  Formulation(const Cluster& cluster, const std::vector<Request>& requests,
              const MilpOptions& options)
      : cluster_(cluster), requests_(requests), options_(options),
        graph_(build_logical_graph(cluster)) {
    for (const Request& r : requests) {
      require(r.client >= 0 && r.client < cluster.client_count(), "request client out of range");
    }
  }

  const LogicalGraph& graph() const { return graph_; }

  std::string node(int id) const {
    if (id < graph_.clients) return "S" + std::to_string(id);
    if (id < graph_.clients + graph_.servers) return "v" + std::to_string(id - graph_.clients);
    return "D" + std::to_string(id - graph_.clients - graph_.servers);
  }
  bool is_server(int id) const { return id >= graph_.clients && id < graph_.clients + graph_.servers; }
  bool is_sink(int id) const { return id >= graph_.clients + graph_.servers; }
  int server(int id) const { return id - graph_.clients; }
  int client_of(int id) const {
    return id < graph_.clients ? id : id - graph_.clients - graph_.servers;
  }

  Expr a(int id) const {
    if (is_server(id)) return Expr{}.add("a_" + node(id), 1.0);
    return Expr{}.shift(is_sink(id) ? cluster_.model.blocks + 1 : 0);
  }
  Expr m(int id) const {
    if (is_server(id)) return Expr{}.add("m_" + node(id), 1.0);
    return Expr{}.shift(1);
  }

  std::string var(const char* family, int r, int e) const {
    const auto& [i, j] = graph_.edges[e];
    return std::string(family) + "_r" + std::to_string(r) + "_" + node(i) + "_" + node(j);
  }

  TokenBasis basis(const Request& r) const {
    return options_.heterogeneous ? TokenBasis::all_tokens(r.input_tokens, r.output_tokens)
                                  : TokenBasis::decode();
  }
  double weight(const Request& r) const {
    return options_.heterogeneous ? static_cast<double>(r.output_tokens) : 1.0;
  }
  Bytes cache(const Request& r) const {
    return options_.heterogeneous ? cluster_.model.cache_bytes(r.input_tokens, r.output_tokens)
                                  : cluster_.model.cache_bytes();
  }

  void write(std::ostream& out) const {
    Writer w(out);
    const int L = cluster_.model.blocks;
    const int R = static_cast<int>(requests_.size());
    const int E = static_cast<int>(graph_.edges.size());
    const int n = graph_.servers;

    out << "\\ Joint block placement and request routing\n";
    out << "\\ blocks=" << L << " servers=" << n << " clients=" << graph_.clients
        << " requests=" << R << " edges=" << E << "\n";

    Expr objective;
    std::vector<Expr> memory(n);
    for (int j = 0; j < n; ++j) {
      memory[j].add("m_v" + std::to_string(j), static_cast<double>(cluster_.model.block_bytes));
    }
    for (int r = 0; r < R; ++r) {
      const Request& q = requests_[r];
      const TokenBasis b = basis(q);
      const double wgt = weight(q);
      for (int e = 0; e < E; ++e) {
        const int to = graph_.edges[e].second;
        if (!is_server(to)) continue;
        const int j = server(to);
        const double tau = wgt * b.tau(cluster_, j);
        objective.add(var("f", r, e), wgt * b.rtt(cluster_, q.client, j));
        objective.add(var("al", r, e), tau).add(var("ga", r, e), tau);
        objective.add(var("be", r, e), -tau).add(var("de", r, e), -tau);
        const auto sc = static_cast<double>(cache(q));
        memory[j].add(var("al", r, e), sc).add(var("ga", r, e), sc);
        memory[j].add(var("be", r, e), -sc).add(var("de", r, e), -sc);
      }
    }
    out << "Minimize\n obj:";
    w.expression(objective.terms);
    out << "\nSubject To\n";

    for (int j = 0; j < n; ++j) {
      w.row("mem_v" + std::to_string(j), memory[j], "<=",
            static_cast<double>(cluster_.servers[j].memory));
    }
    const int V = 2 * graph_.clients + n;
    for (int r = 0; r < R; ++r) {
      std::vector<Expr> flow(V);
      for (int e = 0; e < E; ++e) {
        const auto& [i, j] = graph_.edges[e];
        flow[i].add(var("f", r, e), 1.0);
        flow[j].add(var("f", r, e), -1.0);
      }
      const int c = requests_[r].client;
      for (int v = 0; v < V; ++v) {
        double d = 0.0;
        if (v == graph_.source_node(c)) d = 1.0;
        if (v == graph_.sink_node(c)) d = -1.0;
        w.row("flow_r" + std::to_string(r) + "_" + node(v), flow[v], "=", d);
      }
    }
    for (int j = 0; j < n; ++j) {
      const int id = graph_.server_node(j);
      w.row("place_v" + std::to_string(j), Expr{}.add(a(id), 1).add(m(id), 1), "<=", L + 1);
    }
    for (int r = 0; r < R; ++r) {
      for (int e = 0; e < E; ++e) {
        const auto& [i, j] = graph_.edges[e];
        const std::string f = var("f", r, e), al = var("al", r, e), be = var("be", r, e),
                          ga = var("ga", r, e), de = var("de", r, e);
        const std::string suffix = "_r" + std::to_string(r) + "_" + node(i) + "_" + node(j);
        w.row("feas1" + suffix, Expr{}.add(al, 1).add(a(i), -1).add(m(i), -1), "<=", 0);
        w.row("feas2" + suffix, Expr{}.add(be, 1).add(de, 1).add(a(j), -1).add(m(j), -1), "<=",
              -1);
        const auto link = [&](const char* tag, const std::string& aux, const Expr& value,
                              double big) {
          w.row(std::string("lin_") + tag + "1" + suffix, Expr{}.add(f, -big).add(aux, 1), "<=", 0);
          w.row(std::string("lin_") + tag + "2" + suffix, Expr{}.add(value, -1).add(aux, 1), "<=",
                0);
          w.row(std::string("lin_") + tag + "3" + suffix,
                Expr{}.add(value, 1).add(f, big).add(aux, -1), "<=", big);
        };
        link("al", al, a(j), L + 1);
        link("be", be, a(i), L);
        link("ga", ga, m(j), L);
        link("de", de, m(i), L);
      }
    }

    out << "Bounds\n";
    for (int j = 0; j < n; ++j) {
      out << " 1 <= a_v" << j << " <= " << L << "\n";
      out << " 1 <= m_v" << j << " <= " << L << "\n";
    }
    for (int r = 0; r < R; ++r) {
      for (int e = 0; e < E; ++e) {
        for (const char* fam : {"al", "be", "ga", "de"}) out << ' ' << var(fam, r, e) << " >= 0\n";
      }
    }
    out << "Binary\n";
    for (int r = 0; r < R; ++r) {
      for (int e = 0; e < E; ++e) out << ' ' << var("f", r, e) << "\n";
    }
    out << "General\n";
    for (int j = 0; j < n; ++j) out << " a_v" << j << " m_v" << j << "\n";
    out << "End\n";
  }

 private:
  const Cluster& cluster_;
  const std::vector<Request>& requests_;
  const MilpOptions& options_;
  LogicalGraph graph_;
};

std::string lower(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

bool parse_number(const std::string& token, double& value) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (begin != end && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, value);
  return res.ec == std::errc() && res.ptr == end;
}

[[noreturn]] void malformed(int line, const std::string& what) {
  throw Error(ErrorCode::kValidation, "LP line " + std::to_string(line) + ": " + what);
}

// Parses "[+|-] [coef] name ..." terms followed by an optional "sense rhs".
void parse_terms(const std::vector<std::string>& tokens, int line,
                 std::map<std::string, double>& terms, std::string* sense, double* rhs) {
  double sign = 1.0;
  double coef = 1.0;
  bool have_coef = false;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const std::string& t = tokens[k];
    if (t == "+" || t == "-") {
      sign = t == "-" ? -1.0 : 1.0;
      continue;
    }
    if (t == "<=" || t == ">=" || t == "=" || t == "=<" || t == "=>") {
      if (sense == nullptr || k + 2 != tokens.size() || !parse_number(tokens[k + 1], *rhs)) {
        malformed(line, "bad constraint right-hand side");
      }
      *sense = t == "=<" ? "<=" : (t == "=>" ? ">=" : t);
      return;
    }
    double value = 0.0;
    if (parse_number(t, value)) {
      coef = value;
      have_coef = true;
      continue;
    }
    terms[t] += sign * (have_coef ? coef : 1.0);
    sign = 1.0;
    coef = 1.0;
    have_coef = false;
  }
  if (sense != nullptr) malformed(line, "constraint without a sense");
}

std::vector<std::string> split(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

MilpCounts expected_milp_counts(const Cluster& cluster, const std::vector<Request>& requests) {
  const LogicalGraph g = build_logical_graph(cluster);
  const std::int64_t R = static_cast<std::int64_t>(requests.size());
  const std::int64_t E = static_cast<std::int64_t>(g.edge_count());
  MilpCounts c;
  c.nodes = 2 * g.clients + g.servers;
  c.edges = E;
  c.binaries = R * E;
  c.integers = 2 * g.servers;
  c.auxiliaries = 4 * R * E;
  c.memory_rows = g.servers;
  c.flow_rows = R * c.nodes;
  c.placement_rows = g.servers;
  c.feasibility_rows = 2 * R * E;
  c.linearization_rows = 12 * R * E;
  return c;
}

void emit_milp(const Cluster& cluster, const std::vector<Request>& requests, std::ostream& out,
               const MilpOptions& options) {
  Formulation(cluster, requests, options).write(out);
  if (!out) throw Error(ErrorCode::kIo, "failed writing LP model");
}

void emit_milp(const Cluster& cluster, const std::vector<Request>& requests,
               const std::filesystem::path& path, const MilpOptions& options) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  emit_milp(cluster, requests, out, options);
  out.close();
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

LpModel parse_lp(std::istream& in) {
  enum class Section { kNone, kObjective, kConstraints, kBounds, kBinary, kGeneral, kEnd };
  LpModel model;
  Section section = Section::kNone;
  std::vector<std::string> pending;
  int pending_line = 0;
  auto flush = [&]() {
    if (pending.empty()) return;
    if (section == Section::kObjective) {
      parse_terms(pending, pending_line, model.objective, nullptr, nullptr);
    } else {
      LpRow row;
      std::string head = pending.front();
      if (head.empty() || head.back() != ':') malformed(pending_line, "unnamed constraint");
      row.name = head.substr(0, head.size() - 1);
      pending.erase(pending.begin());
      parse_terms(pending, pending_line, row.terms, &row.sense, &row.rhs);
      model.rows.push_back(std::move(row));
    }
    pending.clear();
  };

  std::string text;
  int line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (const auto cut = text.find('\\'); cut != std::string::npos) text.erase(cut);
    std::vector<std::string> tokens = split(text);
    if (tokens.empty()) continue;
    const std::string key = lower(tokens.size() >= 2 ? tokens[0] + " " + tokens[1] : tokens[0]);
    const std::string first = lower(tokens[0]);
    std::optional<Section> header;
    if (first == "minimize" || first == "minimise" || first == "min") header = Section::kObjective;
    else if (key == "subject to" || key == "such that" || first == "st" || first == "s.t.")
      header = Section::kConstraints;
    else if (first == "bounds" || first == "bound") header = Section::kBounds;
    else if (first == "binary" || first == "binaries" || first == "bin") header = Section::kBinary;
    else if (first == "general" || first == "generals" || first == "gen") header = Section::kGeneral;
    else if (first == "end") header = Section::kEnd;
    if (header) {
      flush();
      section = *header;
      continue;
    }
    switch (section) {
      case Section::kObjective:
      case Section::kConstraints: {
        const bool named = tokens.front().back() == ':';
        if (named) flush();
        if (pending.empty()) pending_line = line_no;
        pending.insert(pending.end(), tokens.begin(), tokens.end());
        if (section == Section::kObjective && named) {
          pending.erase(pending.begin());
        }
        break;
      }
      case Section::kBounds: {
        double lo = 0.0;
        double hi = 0.0;
        if (tokens.size() == 5 && tokens[1] == "<=" && tokens[3] == "<=" &&
            parse_number(tokens[0], lo) && parse_number(tokens[4], hi)) {
          model.bounds[tokens[2]] = {lo, hi, true};
        } else if (tokens.size() == 3 && tokens[1] == ">=" && parse_number(tokens[2], lo)) {
          LpBound& b = model.bounds[tokens[0]];
          b.lower = lo;
        } else if (tokens.size() == 3 && tokens[1] == "<=" && parse_number(tokens[2], hi)) {
          LpBound& b = model.bounds[tokens[0]];
          b.upper = hi;
          b.has_upper = true;
        } else {
          malformed(line_no, "unsupported bound");
        }
        break;
      }
      case Section::kBinary:
        model.binaries.insert(model.binaries.end(), tokens.begin(), tokens.end());
        break;
      case Section::kGeneral:
        model.integers.insert(model.integers.end(), tokens.begin(), tokens.end());
        break;
      case Section::kNone:
        malformed(line_no, "content before the objective section");
      case Section::kEnd:
        malformed(line_no, "content after End");
    }
  }
  flush();
  if (section != Section::kEnd) throw Error(ErrorCode::kValidation, "LP model lacks End");
  return model;
}

MilpCounts LpModel::counts() const {
  MilpCounts c;
  std::set<std::string> aux;
  std::set<std::string> edges;
  std::set<std::string> nodes;
  auto note = [&aux](const std::string& var) {
    if (starts_with(var, "al_") || starts_with(var, "be_") || starts_with(var, "ga_") ||
        starts_with(var, "de_")) {
      aux.insert(var);
    }
  };
  for (const auto& [var, coef] : bounds) note(var);
  for (const LpRow& row : rows) {
    for (const auto& [var, coef] : row.terms) note(var);
    if (starts_with(row.name, "mem_")) ++c.memory_rows;
    else if (starts_with(row.name, "place_")) ++c.placement_rows;
    else if (starts_with(row.name, "feas1_") || starts_with(row.name, "feas2_")) ++c.feasibility_rows;
    else if (starts_with(row.name, "lin_")) ++c.linearization_rows;
    else if (starts_with(row.name, "flow_")) {
      ++c.flow_rows;
      nodes.insert(row.name.substr(row.name.find('_', 5) + 1));
    }
  }
  for (const std::string& f : binaries) edges.insert(f.substr(f.find('_', 2) + 1));
  c.binaries = static_cast<std::int64_t>(binaries.size());
  c.integers = static_cast<std::int64_t>(integers.size());
  c.auxiliaries = static_cast<std::int64_t>(aux.size());
  c.edges = static_cast<std::int64_t>(edges.size());
  c.nodes = static_cast<std::int64_t>(nodes.size());
  return c;
}

double LpModel::objective_value(const std::map<std::string, double>& values) const {
  double total = 0.0;
  for (const auto& [var, coef] : objective) {
    const auto it = values.find(var);
    if (it != values.end()) total += coef * it->second;
  }
  return total;
}

std::vector<std::string> LpModel::violations(const std::map<std::string, double>& values,
                                             double tolerance) const {
  auto value = [&values](const std::string& var) {
    const auto it = values.find(var);
    return it == values.end() ? 0.0 : it->second;
  };
  std::vector<std::string> bad;
  for (const LpRow& row : rows) {
    double lhs = 0.0;
    for (const auto& [var, coef] : row.terms) lhs += coef * value(var);
    const double scale = tolerance * std::max(1.0, std::abs(row.rhs));
    const bool ok = row.sense == "<=" ? lhs <= row.rhs + scale
                    : row.sense == ">=" ? lhs >= row.rhs - scale
                                        : std::abs(lhs - row.rhs) <= scale;
    if (!ok) bad.push_back(row.name);
  }
  for (const auto& [var, b] : bounds) {
    const double v = value(var);
    if (v < b.lower - tolerance || (b.has_upper && v > b.upper + tolerance)) bad.push_back(var);
  }
  for (const std::string& var : binaries) {
    const double v = value(var);
    if (std::abs(v) > tolerance && std::abs(v - 1.0) > tolerance) bad.push_back(var);
  }
  for (const std::string& var : integers) {
    const double v = value(var);
    if (std::abs(v - std::round(v)) > tolerance) bad.push_back(var);
  }
  return bad;
}

std::map<std::string, double> milp_assignment(const Cluster& cluster,
                                              const std::vector<Request>& requests,
                                              const Placement& placement,
                                              const std::vector<RouteAssignment>& routes) {
  require(routes.size() == requests.size(), "one route per request");
  const MilpOptions options;
  const Formulation form(cluster, requests, options);
  const LogicalGraph& g = form.graph();
  const int L = cluster.model.blocks;
  std::map<std::string, double> values;
  auto a_of = [&](int id) {
    if (form.is_server(id)) return placement.spans.at(form.server(id)).first;
    return form.is_sink(id) ? L + 1 : 0;
  };
  auto m_of = [&](int id) {
    return form.is_server(id) ? placement.spans.at(form.server(id)).count : 1;
  };
  for (int j = 0; j < g.servers; ++j) {
    values["a_v" + std::to_string(j)] = placement.spans[j].first;
    values["m_v" + std::to_string(j)] = placement.spans[j].count;
  }
  for (std::size_t r = 0; r < requests.size(); ++r) {
    const int c = requests[r].client;
    std::set<std::pair<int, int>> used;
    int prev = g.source_node(c);
    for (int j : routes[r].servers) {
      used.insert({prev, g.server_node(j)});
      prev = g.server_node(j);
    }
    used.insert({prev, g.sink_node(c)});
    for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
      const auto& [i, j] = g.edges[e];
      const double f = used.count(g.edges[e]) ? 1.0 : 0.0;
      const int ri = static_cast<int>(r);
      values[form.var("f", ri, e)] = f;
      values[form.var("al", ri, e)] = a_of(j) * f;
      values[form.var("be", ri, e)] = a_of(i) * f;
      values[form.var("ga", ri, e)] = m_of(j) * f;
      values[form.var("de", ri, e)] = m_of(i) * f;
    }
  }
  return values;
}

}  // namespace bprr
