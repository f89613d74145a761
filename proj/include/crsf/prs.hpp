#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "crsf/cyclepop.hpp"
#include "crsf/graph.hpp"
#include "crsf/heaps.hpp"

namespace crsf {

// Variables: one successor v_i per node and one bit b_l per oriented cycle.
// Constraint l holds unless c_l is a cycle of F(v) and b_l = 0.
struct PrsInstance {
  const ConnectionGraph* g = nullptr;
  std::vector<OrientedCycle> cycles;
  std::vector<double> alpha;
  std::vector<std::size_t> order;  // order[k] = constraint with priority k
  std::vector<std::size_t> rank;   // inverse of order
  std::map<std::vector<node_t>, std::size_t> index;

  // `sigma` empty = enumeration order.
  static PrsInstance build(const ConnectionGraph& g, const CycleWeight& a,
                           std::vector<std::size_t> sigma = {});
};

struct PrsTrace {
  std::vector<std::uint64_t> resample_counts;
  std::uint64_t total = 0;
  std::vector<node_t> final_successor;
  std::vector<char> final_bits;
  std::vector<std::size_t> events;  // resampled constraint per step

  // Heap of resampled scopes in resampling order.
  CycleHeap heap(const PrsInstance& inst) const;
  // CSV `constraint_id,cycle_length,resample_count`.
  void write_csv(std::ostream& out, const PrsInstance& inst) const;
};

class prs_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::pair<PrsTrace, OrientedCrsf> prs_run(const PrsInstance& inst, std::uint64_t seed,
                                          std::optional<std::uint64_t> max_steps = 100'000'000);

struct PrsExact {
  std::vector<double> per_constraint;
  double total = 0;
  double p_satisfied = 0;  // P(Φ(U) = true) under the product law
};

// Exact expectations by enumerating node assignments; bits of cycles present
// in F(v) are summed out explicitly.
PrsExact resample_stats_exact(const PrsInstance& inst, double bound = 1e7);

// E[Π_l t_l^{♯_l}] as a ratio of trivial-heap sums.
double resample_count_mgf(const PrsInstance& inst, const std::vector<double>& t);

}  // namespace crsf
