#include "crsf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>

namespace crsf {

namespace {

double normalize_angle(double theta) {
  double r = std::fmod(theta, two_pi);
  if (r < 0) r += two_pi;
  if (r >= two_pi) r = 0.0;
  return r;
}

std::string where(int line) { return line > 0 ? "line " + std::to_string(line) + ": " : ""; }

}  // namespace

graph_error::graph_error(const std::string& what, int line)
    : std::runtime_error(where(line) + what), line_(line) {}

ConnectionGraph::ConnectionGraph(node_t n, std::vector<Edge> edges) : n_(n) {
  if (n < 2) throw graph_error("graph needs at least 2 nodes");
  std::set<std::pair<node_t, node_t>> seen;
  for (auto& e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) throw graph_error("node id out of range");
    if (e.u == e.v) throw graph_error("self-loop at node " + std::to_string(e.u));
    if (!(e.w > 0) || !std::isfinite(e.w)) throw graph_error("nonpositive weight");
    if (!std::isfinite(e.theta)) throw graph_error("non-finite angle");
    if (e.u > e.v) {
      std::swap(e.u, e.v);
      e.theta = -e.theta;
    }
    e.theta = normalize_angle(e.theta);
    if (!seen.insert({e.u, e.v}).second)
      throw graph_error("duplicate edge " + std::to_string(e.u) + " " + std::to_string(e.v));
  }
  edges_ = std::move(edges);

  std::vector<std::vector<Arc>> adj(n);
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    adj[e.u].push_back({e.v, e.w, e.theta, 0.0, i});
    adj[e.v].push_back({e.u, e.w, -e.theta, 0.0, i});
  }
  offset_.assign(n + 1, 0);
  degree_.assign(n, 0.0);
  for (node_t x = 0; x < n; ++x) {
    auto& list = adj[x];
    std::sort(list.begin(), list.end(), [](const Arc& a, const Arc& b) { return a.to < b.to; });
    double cum = 0;
    for (auto& a : list) {
      cum += a.w;
      a.cum = cum;
    }
    degree_[x] = cum;
    offset_[x + 1] = offset_[x] + list.size();
    arcs_.insert(arcs_.end(), list.begin(), list.end());
  }

  std::vector<char> seen_node(n, 0);
  std::vector<node_t> stack{0};
  seen_node[0] = 1;
  node_t reached = 1;
  while (!stack.empty()) {
    node_t x = stack.back();
    stack.pop_back();
    for (const Arc& a : arcs(x))
      if (!seen_node[a.to]) {
        seen_node[a.to] = 1;
        ++reached;
        stack.push_back(a.to);
      }
  }
  if (reached != n) throw graph_error("graph is disconnected");
}

std::span<const Arc> ConnectionGraph::arcs(node_t x) const {
  return {arcs_.data() + offset_[x], offset_[x + 1] - offset_[x]};
}

const Arc* ConnectionGraph::find_arc(node_t x, node_t y) const {
  if (x < 0 || x >= n_) return nullptr;
  auto list = arcs(x);
  auto it = std::lower_bound(list.begin(), list.end(), y,
                             [](const Arc& a, node_t v) { return a.to < v; });
  if (it == list.end() || it->to != y) return nullptr;
  return &*it;
}

namespace {
const Arc& require_arc(const ConnectionGraph& g, node_t x, node_t y) {
  const Arc* a = g.find_arc(x, y);
  if (!a)
    throw std::invalid_argument("nodes " + std::to_string(x) + " and " + std::to_string(y) +
                                " are not adjacent");
  return *a;
}
}  // namespace

double ConnectionGraph::angle(node_t x, node_t y) const { return require_arc(*this, x, y).angle; }

double ConnectionGraph::reference_angle(node_t x, node_t y) const {
  return normalize_angle(angle(x, y));
}

std::complex<double> ConnectionGraph::phase(node_t x, node_t y) const {
  return std::polar(1.0, -angle(x, y));
}

double ConnectionGraph::weight(node_t x, node_t y) const { return require_arc(*this, x, y).w; }

std::size_t ConnectionGraph::edge_index(node_t x, node_t y) const {
  return require_arc(*this, x, y).edge;
}

nlohmann::json ConnectionGraph::to_json() const {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : edges_) edges.push_back({{"u", e.u}, {"v", e.v}, {"w", e.w}, {"theta", e.theta}});
  return {{"node_count", n_}, {"edges", edges}};
}

std::vector<node_t> least_rotation(std::span<const node_t> s) {
  const std::size_t n = s.size();
  std::size_t i = 0, j = 1, k = 0;
  while (i < n && j < n && k < n) {
    node_t a = s[(i + k) % n], b = s[(j + k) % n];
    if (a == b) {
      ++k;
      continue;
    }
    if (a > b)
      i += k + 1;
    else
      j += k + 1;
    if (i == j) ++j;
    k = 0;
  }
  std::size_t start = n ? std::min(i, j) : 0;
  std::vector<node_t> out(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = s[(start + t) % n];
  return out;
}

OrientedCycle::OrientedCycle(std::span<const node_t> seq) : nodes(least_rotation(seq)) {}

OrientedCycle::OrientedCycle(std::initializer_list<node_t> seq)
    : OrientedCycle(std::span<const node_t>(seq.begin(), seq.size())) {}

bool OrientedCycle::contains(node_t x) const {
  return std::find(nodes.begin(), nodes.end(), x) != nodes.end();
}

OrientedCycle OrientedCycle::reversed() const {
  std::vector<node_t> r(nodes.rbegin(), nodes.rend());
  return OrientedCycle(r);
}

std::uint64_t OrientedCycle::mask() const {
  std::uint64_t m = 0;
  for (node_t x : nodes) m |= std::uint64_t{1} << x;
  return m;
}

std::string to_string(const OrientedCycle& c) {
  std::string s = "(";
  for (std::size_t i = 0; i < c.nodes.size(); ++i) s += (i ? "," : "") + std::to_string(c.nodes[i]);
  return s + ")";
}

std::complex<double> holonomy(const ConnectionGraph& g, std::span<const node_t> path) {
  double angle = 0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) angle += g.angle(path[i], path[i + 1]);
  return std::polar(1.0, -angle);
}

std::complex<double> holonomy(const ConnectionGraph& g, const OrientedCycle& c) {
  return std::polar(1.0, -cycle_angle(g, c.nodes));
}

double cycle_angle(const ConnectionGraph& g, std::span<const node_t> c) {
  double angle = 0;
  for (std::size_t i = 0; i < c.size(); ++i) angle += g.angle(c[i], c[(i + 1) % c.size()]);
  return angle;
}

double cycle_transition_product(const ConnectionGraph& g, std::span<const node_t> c) {
  double p = 1;
  for (std::size_t i = 0; i < c.size(); ++i) p *= g.transition(c[i], c[(i + 1) % c.size()]);
  return p;
}

double cycle_weight_product(const ConnectionGraph& g, std::span<const node_t> c) {
  double p = 1;
  for (std::size_t i = 0; i < c.size(); ++i) p *= g.weight(c[i], c[(i + 1) % c.size()]);
  return p;
}

CycleWeight CycleWeight::determinantal() { return CycleWeight{}; }

CycleWeight CycleWeight::explicit_table(const Table& table) {
  CycleWeight a;
  a.mode_ = Mode::explicit_table;
  for (const auto& [key, value] : table) {
    if (key.size() < 2) throw std::invalid_argument("cycle needs at least 2 nodes");
    if (!(value >= 0.0 && value <= 1.0)) throw std::invalid_argument("alpha outside [0,1]");
    a.table_[least_rotation(key)] = value;
  }
  return a;
}

double CycleWeight::operator()(std::span<const node_t> cycle, double theta) const {
  if (mode_ == Mode::determinantal) {
    if (cycle.size() == 2) return 0.0;
    return 1.0 - std::cos(theta);
  }
  auto it = table_.find(least_rotation(cycle));
  return it == table_.end() ? 0.0 : it->second;
}

double CycleWeight::of(const ConnectionGraph& g, const OrientedCycle& c) const {
  if (mode_ == Mode::explicit_table) return (*this)(c.nodes, 0.0);
  return (*this)(c.nodes, cycle_angle(g, c.nodes));
}

void for_each_simple_cycle(const ConnectionGraph& g, std::size_t max_len,
                           const std::function<bool(const std::vector<node_t>&)>& visit) {
  const node_t n = g.node_count();
  std::vector<char> on_path(n, 0);
  std::vector<node_t> path;
  bool stop = false;

  std::function<void(node_t, node_t)> dfs = [&](node_t s, node_t x) {
    for (const Arc& a : g.arcs(x)) {
      if (stop) return;
      node_t y = a.to;
      if (y == s) {
        // length-2 closures are backtracks; report each once from its min node
        if (path.size() >= 2 && !visit(path)) stop = true;
        continue;
      }
      if (y < s || on_path[y] || path.size() >= max_len) continue;
      on_path[y] = 1;
      path.push_back(y);
      dfs(s, y);
      path.pop_back();
      on_path[y] = 0;
    }
  };

  for (node_t s = 0; s < n && !stop; ++s) {
    path.assign(1, s);
    on_path[s] = 1;
    dfs(s, s);
    on_path[s] = 0;
  }
}

nlohmann::json AssumptionReport::to_json() const {
  return {{"nontrivial_connection", nontrivial_connection},
          {"nontrivial_sign_flipped", nontrivial_sign_flipped},
          {"weakly_inconsistent", weakly_inconsistent},
          {"nontrivial_weights", nontrivial_weights},
          {"check_level", check_level},
          {"cycles_checked", cycles_checked},
          {"length_bound", length_bound}};
}

AssumptionReport validate_assumptions(const ConnectionGraph& g, const CycleWeight& a,
                                      const AssumptionOptions& opt) {
  constexpr double tol = 1e-12;
  const node_t n = g.node_count();
  AssumptionReport rep;
  rep.weakly_inconsistent = true;

  // Fundamental cycles of a BFS tree. Holonomy is abelian, so these decide
  // triviality of the connection and of its sign-flipped version exactly.
  std::vector<node_t> parent(n, -1), depth(n, 0);
  std::vector<double> pot(n, 0.0);
  std::vector<char> seen(n, 0);
  std::queue<node_t> bfs;
  bfs.push(0);
  seen[0] = 1;
  while (!bfs.empty()) {
    node_t x = bfs.front();
    bfs.pop();
    for (const Arc& arc : g.arcs(x))
      if (!seen[arc.to]) {
        seen[arc.to] = 1;
        parent[arc.to] = x;
        depth[arc.to] = depth[x] + 1;
        pot[arc.to] = pot[x] + arc.angle;
        bfs.push(arc.to);
      }
  }
  for (const Edge& e : g.edges()) {
    if (parent[e.v] == e.u || parent[e.u] == e.v) continue;
    node_t x = e.u, y = e.v;
    while (depth[x] > depth[y]) x = parent[x];
    while (depth[y] > depth[x]) y = parent[y];
    while (x != y) {
      x = parent[x];
      y = parent[y];
    }
    const double len = depth[e.u] + depth[e.v] + 1 - 2 * depth[x];
    const double theta = pot[e.u] + e.theta - pot[e.v];
    const double c = std::cos(theta);
    if (1.0 - c > tol) rep.nontrivial_connection = true;
    if (1.0 - std::cos(theta + len * std::numbers::pi) > tol) rep.nontrivial_sign_flipped = true;
    if (c < -tol) rep.weakly_inconsistent = false;
    ++rep.cycles_checked;
  }

  const bool full = n <= opt.enumeration_limit;
  rep.length_bound = full ? static_cast<std::size_t>(n) : opt.length_bound;
  bool exhausted = true;
  for_each_simple_cycle(g, rep.length_bound, [&](const std::vector<node_t>& c) {
    if (c.size() >= 3 && std::cos(cycle_angle(g, c)) < -tol) rep.weakly_inconsistent = false;
    if (++rep.cycles_checked >= opt.cycle_budget) {
      exhausted = false;
      return false;
    }
    return true;
  });
  rep.check_level = full && exhausted ? "full-enumeration" : "cycle-basis+bounded-length";

  if (a.mode() == CycleWeight::Mode::determinantal) {
    rep.nontrivial_weights = rep.nontrivial_connection;
  } else {
    for (const auto& [key, value] : a.table()) {
      if (value <= 0) continue;
      bool valid = true;
      for (std::size_t i = 0; i < key.size() && valid; ++i)
        valid = g.adjacent(key[i], key[(i + 1) % key.size()]);
      if (valid) rep.nontrivial_weights = true;
    }
  }
  return rep;
}

namespace {

ConnectionGraph parse_edge_list(std::istream& in) {
  std::string raw;
  int line = 0;
  long long n = -1;
  std::vector<Edge> edges;
  std::map<std::pair<node_t, node_t>, int> first_line;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::string probe;
    if (!(ls >> probe)) continue;
    ls.clear();
    ls.seekg(0);
    if (n < 0) {
      std::string extra;
      if (!(ls >> n) || (ls >> extra)) throw graph_error("expected node count", line);
      if (n < 2 || n > 1'000'000) throw graph_error("node count must be >= 2", line);
      continue;
    }
    long long u, v;
    double w, theta;
    std::string extra;
    if (!(ls >> u >> v >> w >> theta) || (ls >> extra))
      throw graph_error("expected `u v w theta`", line);
    if (u < 0 || v < 0 || u >= n || v >= n) throw graph_error("node id out of range", line);
    if (u == v) throw graph_error("self-loop at node " + std::to_string(u), line);
    if (!(w > 0) || !std::isfinite(w)) throw graph_error("nonpositive weight", line);
    if (!std::isfinite(theta)) throw graph_error("non-finite angle", line);
    const std::pair<node_t, node_t> key = std::minmax(static_cast<node_t>(u), static_cast<node_t>(v));
    if (auto [it, fresh] = first_line.emplace(key, line); !fresh)
      throw graph_error("duplicate edge (first seen on line " + std::to_string(it->second) + ")",
                        line);
    edges.push_back({static_cast<node_t>(u), static_cast<node_t>(v), w, theta});
  }
  if (n < 0) throw graph_error("empty input", line);
  try {
    return ConnectionGraph(static_cast<node_t>(n), std::move(edges));
  } catch (const graph_error& e) {
    throw graph_error(e.what(), 1);
  }
}

ConnectionGraph parse_json(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw graph_error(std::string("json parse error: ") + e.what());
  }
  try {
    node_t n = j.at("node_count").get<node_t>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges"))
      edges.push_back({e.at("u").get<node_t>(), e.at("v").get<node_t>(), e.at("w").get<double>(),
                       e.value("theta", 0.0)});
    return ConnectionGraph(n, std::move(edges));
  } catch (const nlohmann::json::exception& e) {
    throw graph_error(std::string("json schema error: ") + e.what());
  }
}

}  // namespace

ConnectionGraph load_graph(std::istream& in, GraphFormat format) {
  return format == GraphFormat::json ? parse_json(in) : parse_edge_list(in);
}

ConnectionGraph load_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw graph_error("cannot open " + path);
  const bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  return load_graph(in, json ? GraphFormat::json : GraphFormat::edge_list);
}

void save_edge_list(std::ostream& out, const ConnectionGraph& g) {
  auto old = out.precision(17);
  out << g.node_count() << '\n';
  for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << ' ' << e.w << ' ' << e.theta << '\n';
  out.precision(old);
}

CycleWeight load_alpha(std::istream& in) {
  CycleWeight::Table table;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    double value;
    if (!(ls >> value)) {
      std::string probe;
      std::istringstream again(raw);
      if (again >> probe) throw graph_error("expected `alpha v0 v1 ...`", line);
      continue;
    }
    std::vector<node_t> cycle;
    long long x;
    while (ls >> x) cycle.push_back(static_cast<node_t>(x));
    if (!ls.eof()) throw graph_error("bad node id", line);
    if (cycle.size() < 2) throw graph_error("cycle needs at least 2 nodes", line);
    if (!(value >= 0 && value <= 1)) throw graph_error("alpha outside [0,1]", line);
    table[least_rotation(cycle)] = value;
  }
  return CycleWeight::explicit_table(table);
}

}  // namespace crsf
