#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "crsf/graph.hpp"
#include "crsf/rng.hpp"

namespace crsf {

// Closed walk (x_0, ..., x_k = x_0); a single node is the trivial loop.
struct BasedLoop {
  std::vector<node_t> nodes;

  static BasedLoop trivial(node_t x) { return {{x}}; }

  node_t base() const { return nodes.front(); }
  std::size_t length() const { return nodes.size() - 1; }
  bool is_trivial() const { return nodes.size() == 1; }
  // d(γ): number of returns to the base.
  std::size_t returns() const;

  BasedLoop concat(const BasedLoop& other) const;
  BasedLoop power(std::size_t m) const;

  bool operator==(const BasedLoop&) const = default;
};

// Shift-equivalence class of a nontrivial based loop.
struct UnbasedLoop {
  std::vector<node_t> canonical;  // minimal rotation of (x_0, ..., x_{k-1})
  std::size_t length = 0;
  std::size_t representatives = 0;  // N_[γ]
  std::size_t multiplicity = 0;     // mult(γ)

  // Number of x-based representatives, N·d_x/|γ|.
  std::size_t representatives_at(node_t x) const;

  auto operator<=>(const UnbasedLoop&) const = default;
};

// Cycles popped by chronological loop erasure, in popping order.
std::vector<OrientedCycle> erase_cycles(const BasedLoop& loop);

class LoopMeasureCtx {
 public:
  LoopMeasureCtx(const ConnectionGraph& g, CycleWeight a) : g_(g), a_(std::move(a)) {}

  const ConnectionGraph& graph() const { return g_; }
  const CycleWeight& weight() const { return a_; }

  // q(γ), product of transition probabilities.
  double transition_product(const BasedLoop& loop) const;
  // μ_α(γ) = q(γ) Π (1 − α(c)) over cycles(γ).
  double measure(const BasedLoop& loop) const;
  // m_α([γ]) = μ_α(γ)/mult(γ).
  double unbased_measure(const BasedLoop& loop) const;

 private:
  const ConnectionGraph& g_;
  CycleWeight a_;
};

double loop_measure(const LoopMeasureCtx& ctx, const BasedLoop& loop);

UnbasedLoop unbased_stats(const BasedLoop& loop);

// First-return excursions of a loop at its base.
std::vector<BasedLoop> first_return_excursions(const BasedLoop& loop);

// Ordered block sizes M with P(M = (m_1..m_k)) = 1/(k! m_1⋯m_k).
std::vector<std::size_t> draw_block_sizes(std::size_t n, Rng& rng);
double composition_probability(std::span<const std::size_t> blocks);

// Splits a popped loop into based loops by concatenating consecutive
// excursions per block.
std::vector<BasedLoop> random_split_based(const BasedLoop& loop, Rng& rng);
std::vector<UnbasedLoop> random_split(const BasedLoop& loop, Rng& rng);

// Class counts keyed by canonical sequence.
using SplitCounts = std::map<std::vector<node_t>, std::uint64_t>;
void accumulate(SplitCounts& counts, const std::vector<UnbasedLoop>& loops);
// CSV with header `class,length,count`; class nodes joined by '-'.
void write_split_csv(std::ostream& out, const SplitCounts& counts);

}  // namespace crsf
