#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crsf/graph.hpp"
#include "crsf/loops.hpp"
#include "crsf/spectral.hpp"

namespace crsf {

class enumeration_limit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Backtracks once, both orientations of longer simple cycles; sorted.
std::vector<OrientedCycle> enumerate_oriented_cycles(const ConnectionGraph& g, node_t limit = 12);

struct HeapPiece {
  OrientedCycle cycle;
  int level = 1;

  auto operator<=>(const HeapPiece&) const = default;
};

bool concurrent(const OrientedCycle& a, const OrientedCycle& b);

struct CycleHeap {
  std::vector<HeapPiece> pieces;

  // Places c on top: level = 1 + highest level among concurrent pieces.
  void push(const OrientedCycle& c);
  // Levels recomputed as longest-chain depth, pieces sorted.
  CycleHeap canonical() const;
  std::vector<std::size_t> maximal() const;
  bool is_pyramid() const { return !pieces.empty() && maximal().size() == 1; }
  std::size_t total_length() const;

  bool operator==(const CycleHeap& o) const { return canonical().pieces == o.canonical().pieces; }
};

CycleHeap pyramid_from_loop(const BasedLoop& loop);
BasedLoop loop_from_pyramid(const CycleHeap& pyramid, node_t x);
// One entry per node x_1..x_{n-1} of the ordering (empty heap when absent).
std::vector<CycleHeap> decompose_heap(const CycleHeap& heap, std::span<const node_t> ordering);
// Superposes heaps in order.
CycleHeap compose(std::span<const CycleHeap> heaps);

// Alternating sums over sets of vertex-disjoint pieces, with memo on the
// available node set. Pieces are indexed like `cycles`.
class TrivialHeapSum {
 public:
  explicit TrivialHeapSum(std::vector<OrientedCycle> cycles);

  const std::vector<OrientedCycle>& cycles() const { return cycles_; }

  // Σ over trivial heaps inside `avail` of (−1)^{|C|} Π weight[c].
  double sum(const std::vector<double>& weight, std::uint64_t avail) const;

  // Σ (−1)^{|C|} Π w_c · L^k for k = 0,1,2, L the total length of C.
  struct Moments {
    double z0 = 0, z1 = 0, z2 = 0;
  };
  Moments moments(const std::vector<double>& weight, std::uint64_t avail) const;

 private:
  std::vector<OrientedCycle> cycles_;
  std::vector<std::uint64_t> mask_;
  std::vector<std::vector<std::size_t>> by_min_;
};

std::uint64_t node_mask(node_t n, const std::vector<node_t>& avoid = {});

// μ_α(c) = q(c)(1 − α(c)) per piece, times t^{|c|}.
std::vector<double> piece_weights(const ConnectionGraph& g, const CycleWeight& a,
                                  const std::vector<OrientedCycle>& cycles, double t);

double trivial_heap_sum(const ConnectionGraph& g, const CycleWeight& a, double t,
                        const std::vector<node_t>& avoid = {});
double green_generic(const ConnectionGraph& g, const CycleWeight& a, double t, node_t x,
                     const std::vector<node_t>& avoid = {});
std::vector<std::pair<double, double>> mgf_generic(const ConnectionGraph& g, const CycleWeight& a,
                                                   const std::vector<double>& t_grid);
// Exact mean/variance/MGF for any α via the moment-carrying trivial-heap sum.
TLawReport tlaw_generic(const ConnectionGraph& g, const CycleWeight& a,
                        const std::vector<double>& t_grid = default_t_grid());

}  // namespace crsf
