#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace crsf {

using node_t = std::int32_t;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Undirected edge stored in its reference orientation u < v; theta is the
// angle of u -> v in [0, 2pi).
struct Edge {
  node_t u;
  node_t v;
  double w;
  double theta;
};

// Outgoing half-edge. `angle` is signed: +theta along the reference
// orientation, -theta against it, so a backtrack sums to exactly 0.
struct Arc {
  node_t to;
  double w;
  double angle;
  double cum;  // running sum of weights over arcs(x) up to and including this one
  std::size_t edge;
};

class graph_error : public std::runtime_error {
 public:
  graph_error(const std::string& what, int line = 0);
  int line() const { return line_; }

 private:
  int line_;
};

class ConnectionGraph {
 public:
  // Edges may come in either orientation; they are normalized to u < v.
  // Throws graph_error on self-loops, duplicates, bad weights, bad ids or a
  // disconnected graph.
  ConnectionGraph(node_t n, std::vector<Edge> edges);

  node_t node_count() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }

  std::span<const Arc> arcs(node_t x) const;
  double degree(node_t x) const { return degree_[x]; }

  const Arc* find_arc(node_t x, node_t y) const;
  bool adjacent(node_t x, node_t y) const { return find_arc(x, y) != nullptr; }

  // Signed angle of x -> y; throws if not adjacent.
  double angle(node_t x, node_t y) const;
  // Angle of x -> y reduced to [0, 2pi).
  double reference_angle(node_t x, node_t y) const;
  // phi_xy = exp(-i angle(x,y)).
  std::complex<double> phase(node_t x, node_t y) const;
  double weight(node_t x, node_t y) const;
  double transition(node_t x, node_t y) const { return weight(x, y) / degree_[x]; }

  std::size_t edge_index(node_t x, node_t y) const;

  nlohmann::json to_json() const;

 private:
  node_t n_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offset_;
  std::vector<Arc> arcs_;
  std::vector<double> degree_;
};

// Smallest rotation of a cyclic sequence.
std::vector<node_t> least_rotation(std::span<const node_t> seq);

// Unbased oriented cycle, stored as its lexicographically minimal rotation.
// Length 2 is a backtrack.
struct OrientedCycle {
  std::vector<node_t> nodes;

  OrientedCycle() = default;
  explicit OrientedCycle(std::span<const node_t> seq);
  OrientedCycle(std::initializer_list<node_t> seq);

  std::size_t size() const { return nodes.size(); }
  bool is_backtrack() const { return nodes.size() == 2; }
  bool contains(node_t x) const;
  OrientedCycle reversed() const;
  std::uint64_t mask() const;

  auto operator<=>(const OrientedCycle&) const = default;
};

std::string to_string(const OrientedCycle& c);

// Product of phases along consecutive pairs of `path`.
std::complex<double> holonomy(const ConnectionGraph& g, std::span<const node_t> path);
// Closed version: includes the edge from the last node back to the first.
std::complex<double> holonomy(const ConnectionGraph& g, const OrientedCycle& c);
// theta(c), the summed signed angle around the cycle.
double cycle_angle(const ConnectionGraph& g, std::span<const node_t> cycle);
// Product of transition probabilities around the cycle.
double cycle_transition_product(const ConnectionGraph& g, std::span<const node_t> cycle);
double cycle_weight_product(const ConnectionGraph& g, std::span<const node_t> cycle);

class CycleWeight {
 public:
  enum class Mode { determinantal, explicit_table };
  using Table = std::map<std::vector<node_t>, double>;

  static CycleWeight determinantal();
  // Keys are canonicalized; values must lie in [0,1].
  static CycleWeight explicit_table(const Table& table);

  Mode mode() const { return mode_; }
  const Table& table() const { return table_; }

  // alpha of a cycle given as its node sequence (any rotation) and its angle sum.
  double operator()(std::span<const node_t> cycle, double theta) const;
  double of(const ConnectionGraph& g, const OrientedCycle& c) const;

 private:
  Mode mode_ = Mode::determinantal;
  Table table_;
};

// Calls `visit` on every simple oriented cycle (backtracks once, both
// orientations of longer cycles) of length <= max_len, each given in
// canonical rotation. Returning false from `visit` stops the search.
void for_each_simple_cycle(const ConnectionGraph& g, std::size_t max_len,
                           const std::function<bool(const std::vector<node_t>&)>& visit);

struct AssumptionOptions {
  node_t enumeration_limit = 12;
  std::size_t length_bound = 4;
  std::size_t cycle_budget = 2'000'000;
};

struct AssumptionReport {
  bool nontrivial_connection = false;
  bool nontrivial_sign_flipped = false;
  bool weakly_inconsistent = false;
  bool nontrivial_weights = false;
  std::string check_level;  // "full-enumeration" or "cycle-basis+bounded-length"
  std::size_t cycles_checked = 0;
  std::size_t length_bound = 0;

  bool determinantal_ok() const { return nontrivial_connection && weakly_inconsistent; }
  nlohmann::json to_json() const;
};

AssumptionReport validate_assumptions(const ConnectionGraph& g, const CycleWeight& a,
                                      const AssumptionOptions& opt = {});

enum class GraphFormat { edge_list, json };

ConnectionGraph load_graph(std::istream& in, GraphFormat format = GraphFormat::edge_list);
ConnectionGraph load_graph_file(const std::string& path);
void save_edge_list(std::ostream& out, const ConnectionGraph& g);

// Explicit alpha file: one cycle per line, `value v0 v1 ... vk-1`; `#` comments.
CycleWeight load_alpha(std::istream& in);

}  // namespace crsf
