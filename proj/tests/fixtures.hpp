#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "crsf/graph.hpp"
#include "crsf/rng.hpp"

namespace fixtures {

using crsf::ConnectionGraph;
using crsf::CycleWeight;
using crsf::Edge;
using crsf::node_t;

inline constexpr double half_pi = std::numbers::pi / 2;

inline ConnectionGraph two_node() { return ConnectionGraph(2, {{0, 1, 1.0, 0.0}}); }

inline CycleWeight backtrack_alpha(double a) {
  return CycleWeight::explicit_table({{{0, 1}, a}});
}

// Triangle with angle theta on edge (0,1).
inline ConnectionGraph k3(double theta = half_pi) {
  return ConnectionGraph(3, {{0, 1, 1.0, theta}, {1, 2, 1.0, 0.0}, {0, 2, 1.0, 0.0}});
}

// K4 with unequal weights and angle theta on edge (0,1).
inline ConnectionGraph k4(double theta = half_pi) {
  return ConnectionGraph(4, {{0, 1, 1.0, theta},
                             {0, 2, 2.0, 0.0},
                             {0, 3, 0.5, 0.0},
                             {1, 2, 1.5, 0.0},
                             {1, 3, 1.0, 0.0},
                             {2, 3, 1.0, 0.0}});
}

inline ConnectionGraph path(node_t n) {
  std::vector<Edge> e;
  for (node_t i = 0; i + 1 < n; ++i) e.push_back({i, i + 1, 1.0, 0.0});
  return ConnectionGraph(n, e);
}

// Random connected graph on n nodes with weights in [0.5, 2], one noisy
// edge lying on a cycle with angle in (0, pi/2], and a random gauge
// transform so that every edge carries a phase. All cycles then have
// cos θ >= 0 and at least one has θ != 0.
inline ConnectionGraph random_assumption_graph(node_t n, crsf::Rng& rng, double p = 0.6) {
  // fewer than three nodes cannot carry a non-bridge edge
  if (n < 3) throw std::invalid_argument("random_assumption_graph needs n >= 3");
  while (true) {
    std::vector<Edge> e;
    for (node_t u = 0; u < n; ++u)
      for (node_t v = u + 1; v < n; ++v)
        if (rng.uniform() < p) e.push_back({u, v, 0.5 + 1.5 * rng.uniform(), 0.0});
    if (e.size() < static_cast<std::size_t>(n)) continue;
    // keep only graphs whose chosen noisy edge is not a bridge
    const std::size_t noisy = rng.below(e.size());
    std::vector<Edge> without = e;
    without.erase(without.begin() + static_cast<std::ptrdiff_t>(noisy));
    try {
      ConnectionGraph check(n, without);
    } catch (const crsf::graph_error&) {
      continue;
    }
    e[noisy].theta = half_pi * (0.05 + 0.95 * rng.uniform());
    std::vector<double> psi(n);
    for (auto& x : psi) x = crsf::two_pi * rng.uniform();
    for (auto& ed : e) ed.theta += psi[ed.u] - psi[ed.v];
    return ConnectionGraph(n, e);
  }
}

// Leibniz expansion over all permutations; independent of any LU code.
inline std::complex<double> leibniz_det(const std::vector<std::vector<std::complex<double>>>& m) {
  const std::size_t n = m.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::complex<double> total = 0;
  do {
    int inversions = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) inversions += perm[i] > perm[j];
    std::complex<double> term = inversions % 2 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) term *= m[i][perm[i]];
    total += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

// Δ (sign = -1) or D + W⊙Φ (sign = +1) as nested vectors, built from arcs.
inline std::vector<std::vector<std::complex<double>>> twisted(const ConnectionGraph& g, double sign,
                                                              const std::vector<node_t>& keep) {
  std::vector<std::vector<std::complex<double>>> m(keep.size(),
                                                   std::vector<std::complex<double>>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (std::size_t j = 0; j < keep.size(); ++j) {
      if (i == j) m[i][j] = g.degree(keep[i]);
      else if (g.adjacent(keep[i], keep[j]))
        m[i][j] = sign * g.weight(keep[i], keep[j]) * std::polar(1.0, -g.angle(keep[i], keep[j]));
    }
  return m;
}

inline std::vector<node_t> all_nodes(const ConnectionGraph& g) {
  std::vector<node_t> v(g.node_count());
  for (node_t i = 0; i < g.node_count(); ++i) v[i] = i;
  return v;
}

// Cofactor oracle: E[T] = sum_x deg(x) det Δ_{V∖x} / det Δ, parity from
// det(D − W⊙Φ) / det(D + W⊙Φ).
struct CofactorOracle {
  double mean;
  double parity;
  double det_delta;
};

inline CofactorOracle cofactor_oracle(const ConnectionGraph& g) {
  const auto nodes = all_nodes(g);
  const auto det = leibniz_det(twisted(g, -1, nodes));
  const auto plus = leibniz_det(twisted(g, +1, nodes));
  std::complex<double> mean = 0;
  for (node_t x : nodes) {
    std::vector<node_t> rest;
    for (node_t y : nodes)
      if (y != x) rest.push_back(y);
    mean += g.degree(x) * leibniz_det(twisted(g, -1, rest)) / det;
  }
  const double sign = g.node_count() % 2 ? -1.0 : 1.0;
  return {mean.real(), sign * (det / plus).real(), det.real()};
}

}  // namespace fixtures

namespace fixtures {

// Grid with rows x cols nodes, id = r*cols + c, unit weights, zero angles.
inline ConnectionGraph grid(node_t rows, node_t cols) {
  std::vector<Edge> e;
  for (node_t r = 0; r < rows; ++r)
    for (node_t c = 0; c < cols; ++c) {
      const node_t id = r * cols + c;
      if (c + 1 < cols) e.push_back({id, id + 1, 1.0, 0.0});
      if (r + 1 < rows) e.push_back({id, id + cols, 1.0, 0.0});
    }
  return ConnectionGraph(rows * cols, e);
}

// Loop on the 3x3 grid whose erasure pops a square, a second square twice,
// then the outer boundary.
inline const std::vector<node_t> grid_loop_with_repeat{0, 1, 4, 3, 0, 1, 2, 5, 4, 1, 2,
                                                        5, 4, 1, 2, 5, 8, 7, 6, 3, 0};

// Loop on the 3x3 grid: two disjoint backtracks then the square through the base.
inline const std::vector<node_t> grid_loop_two_backtracks{0, 1, 2, 1, 4, 7, 4, 3, 0};

// Oriented CRSF of the 3x4 grid with three stages under the ordering
// (0, 10, 11, ...): a square at the top left, a branch 10 -> 9 -> 8 -> 4,
// and a second square reached from 11.
inline const std::vector<node_t> grid_crsf_succ{1, 5, 3, 7, 0, 4, 2, 6, 4, 8, 9, 7};
inline const std::vector<node_t> grid_crsf_order{0, 10, 11, 1, 2, 3, 4, 5, 6, 7, 8, 9};

}  // namespace fixtures
