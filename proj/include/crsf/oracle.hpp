#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "crsf/cyclepop.hpp"
#include "crsf/graph.hpp"

namespace crsf {

enum class EnsembleKind { oriented_crsf, crsf, rooted_mtsf };

struct EnsembleItem {
  std::vector<node_t> successor;     // oriented kinds; root_node marks a root
  std::vector<std::size_t> edges;    // unoriented kind: sorted edge indices
  std::vector<OrientedCycle> cycles; // unoriented kind: one orientation per cycle
  double weight = 0;
};

struct EnumeratedEnsemble {
  EnsembleKind kind = EnsembleKind::oriented_crsf;
  std::vector<EnsembleItem> items;
  double z = 0;
};

// All successor maps, weight Π p_{x v(x)} · Π α(c). Zero weights are kept.
EnumeratedEnsemble enumerate_oriented_crsfs(const ConnectionGraph& g, const CycleWeight& a,
                                            node_t limit = 12);
// Determinantal weights Π w_e · Π 2(1 − cos θ(c)), orientation pairs merged.
EnumeratedEnsemble enumerate_crsfs(const ConnectionGraph& g, node_t limit = 12);
// Successor maps on G_r: weight Π (w or q) · Π α(c); q marks each root.
EnumeratedEnsemble enumerate_rooted_mtsfs(const ConnectionGraph& g, const CycleWeight& a, double q,
                                          node_t limit = 12);

struct NormalizationReport {
  double crsf_sum = 0, det_delta = 0;
  double mtsf_sum = 0, det_delta_q = 0;
  double oriented_z = 0, trivial_heap_z = 0;
  double max_rel_error = 0;
  bool ok = false;
  nlohmann::json to_json() const;
};

// (i) unoriented CRSF sum = det Δ; (ii) rooted MTSF sum = det(Δ + qI);
// (iii) oriented Z = Z_triv(V, 1). (i),(ii) use determinantal weights.
NormalizationReport check_normalizations(const ConnectionGraph& g, const CycleWeight& a, double q,
                                         double tol = 1e-9);

struct IdentityReport {
  double enumerated = 0;
  double formula = 0;
  double max_abs_error = 0;
  std::size_t cases = 0;
  bool ok = false;
  nlohmann::json to_json() const;
};

// P(C ⊆ cycles) against ν(C) det((Δ⁻¹)_{nodes(C)}); C unoriented, vertex-disjoint.
IdentityReport check_incidence(const ConnectionGraph& g, const std::vector<OrientedCycle>& C,
                               double tol = 1e-9);
// P(S ⊆ edges) against det(K_S), K = B Δ⁻¹ B*, for all |S| <= max_size.
IdentityReport check_determinantal_kernel(const ConnectionGraph& g, std::size_t max_size = 3,
                                          double tol = 1e-8);

struct GofResult {
  double chi2 = 0;
  int dof = 0;
  double p_value = 1;
  std::size_t categories = 0;  // after pooling
};

// Pearson chi-square of observed counts against category probabilities.
// Categories with expected count below 5 are pooled. Observations in a
// category of zero probability give p = 0.
GofResult gof_test(const std::vector<std::uint64_t>& observed, const std::vector<double>& probs);
// Counts per replicate against Poisson(mean).
GofResult poisson_gof(const std::vector<std::uint64_t>& samples, double mean);

// Deterministic stage list: from each node of the ordering not yet covered,
// follow successors until reaching a covered node, the root or a repeat.
std::vector<std::vector<node_t>> stages_decompose(const std::vector<node_t>& successor,
                                                  const std::vector<node_t>& ordering);

// Index of a successor map inside an oriented ensemble (mixed radix over
// the sorted neighbor lists, root last when `with_root`).
std::uint64_t successor_code(const ConnectionGraph& g, const std::vector<node_t>& successor,
                             bool with_root = false);

}  // namespace crsf
