#include "crsf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "crsf/heaps.hpp"
#include "crsf/spectral.hpp"

namespace crsf {

namespace {

void require_small(const ConnectionGraph& g, node_t limit) {
  if (g.node_count() > limit)
    throw enumeration_limit("enumeration limited to " + std::to_string(limit) + " nodes");
}

// Visits every successor map; with_root adds root_node as a last choice.
void for_each_successor_map(const ConnectionGraph& g, bool with_root,
                            const std::function<void(const std::vector<node_t>&)>& visit) {
  const node_t n = g.node_count();
  std::vector<std::size_t> digit(n, 0);
  std::vector<node_t> succ(n);
  auto radix = [&](node_t x) { return g.arcs(x).size() + (with_root ? 1 : 0); };
  while (true) {
    for (node_t x = 0; x < n; ++x)
      succ[x] = digit[x] < g.arcs(x).size() ? g.arcs(x)[digit[x]].to : root_node;
    visit(succ);
    node_t x = 0;
    while (x < n && ++digit[x] == radix(x)) digit[x++] = 0;
    if (x == n) return;
  }
}

OrientedCycle unoriented_key(const OrientedCycle& c) { return std::min(c, c.reversed()); }

double rel_error(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

std::uint64_t successor_code(const ConnectionGraph& g, const std::vector<node_t>& succ, bool with_root) {
  std::uint64_t code = 0, scale = 1;
  for (node_t x = 0; x < g.node_count(); ++x) {
    const auto arcs = g.arcs(x);
    std::uint64_t d = arcs.size();
    if (succ[x] != root_node) {
      auto it = std::find_if(arcs.begin(), arcs.end(), [&](const Arc& a) { return a.to == succ[x]; });
      if (it == arcs.end()) throw std::invalid_argument("successor is not a neighbor");
      d = static_cast<std::uint64_t>(it - arcs.begin());
    } else if (!with_root) {
      throw std::invalid_argument("root successor in a CRSF");
    }
    code += d * scale;
    scale *= arcs.size() + (with_root ? 1 : 0);
  }
  return code;
}

EnumeratedEnsemble enumerate_oriented_crsfs(const ConnectionGraph& g, const CycleWeight& a, node_t limit) {
  require_small(g, limit);
  EnumeratedEnsemble ens;
  ens.kind = EnsembleKind::oriented_crsf;
  for_each_successor_map(g, false, [&](const std::vector<node_t>& succ) {
    EnsembleItem item;
    item.successor = succ;
    item.cycles = functional_cycles(succ);
    double w = 1;
    for (node_t x = 0; x < g.node_count(); ++x) w *= g.transition(x, succ[x]);
    for (const auto& c : item.cycles) w *= a.of(g, c);
    item.weight = w;
    ens.z += w;
    ens.items.push_back(std::move(item));
  });
  return ens;
}

EnumeratedEnsemble enumerate_crsfs(const ConnectionGraph& g, node_t limit) {
  require_small(g, limit);
  std::map<std::vector<std::size_t>, EnsembleItem> merged;
  for_each_successor_map(g, false, [&](const std::vector<node_t>& succ) {
    auto cycles = functional_cycles(succ);
    double w = 1;
    for (const auto& c : cycles) {
      if (c.is_backtrack()) return;
      w *= 1.0 - std::cos(cycle_angle(g, c.nodes));
    }
    std::vector<std::size_t> edges;
    for (node_t x = 0; x < g.node_count(); ++x) {
      w *= g.weight(x, succ[x]);
      edges.push_back(g.edge_index(x, succ[x]));
    }
    std::sort(edges.begin(), edges.end());
    auto& item = merged[edges];
    if (item.edges.empty()) {
      item.edges = edges;
      for (const auto& c : cycles) item.cycles.push_back(unoriented_key(c));
      std::sort(item.cycles.begin(), item.cycles.end());
    }
    item.weight += w;
  });
  EnumeratedEnsemble ens;
  ens.kind = EnsembleKind::crsf;
  for (auto& [key, item] : merged) {
    ens.z += item.weight;
    ens.items.push_back(std::move(item));
  }
  return ens;
}

EnumeratedEnsemble enumerate_rooted_mtsfs(const ConnectionGraph& g, const CycleWeight& a, double q,
                                          node_t limit) {
  require_small(g, limit);
  EnumeratedEnsemble ens;
  ens.kind = EnsembleKind::rooted_mtsf;
  for_each_successor_map(g, true, [&](const std::vector<node_t>& succ) {
    EnsembleItem item;
    item.successor = succ;
    item.cycles = functional_cycles(succ);
    double w = 1;
    for (node_t x = 0; x < g.node_count(); ++x) w *= succ[x] == root_node ? q : g.weight(x, succ[x]);
    for (const auto& c : item.cycles) w *= a.of(g, c);
    item.weight = w;
    ens.z += w;
    ens.items.push_back(std::move(item));
  });
  return ens;
}

nlohmann::json NormalizationReport::to_json() const {
  return {{"crsf_sum", crsf_sum},       {"det_delta", det_delta},
          {"mtsf_sum", mtsf_sum},       {"det_delta_q", det_delta_q},
          {"oriented_z", oriented_z},   {"trivial_heap_z", trivial_heap_z},
          {"max_rel_error", max_rel_error}, {"ok", ok}};
}

NormalizationReport check_normalizations(const ConnectionGraph& g, const CycleWeight& a, double q,
                                         double tol) {
  NormalizationReport r;
  const SpectralBundle b = SpectralBundle::build(g);
  const node_t n = g.node_count();
  r.crsf_sum = enumerate_crsfs(g).z;
  r.det_delta = checked_real(principal_minor_det(b.delta, {}), "det Δ");
  // determinantal weights carry the factor 2 per unoriented cycle through
  // the two orientations of the oriented sum
  r.mtsf_sum = enumerate_rooted_mtsfs(g, CycleWeight::determinantal(), q).z;
  const cmatrix shifted = b.delta + q * cmatrix::Identity(n, n);
  r.det_delta_q = checked_real(principal_minor_det(shifted, {}), "det(Δ+qI)");
  r.oriented_z = enumerate_oriented_crsfs(g, a).z;
  r.trivial_heap_z = trivial_heap_sum(g, a, 1.0);
  r.max_rel_error = std::max({rel_error(r.crsf_sum, r.det_delta), rel_error(r.mtsf_sum, r.det_delta_q),
                              rel_error(r.oriented_z, r.trivial_heap_z)});
  r.ok = r.max_rel_error <= tol;
  return r;
}

nlohmann::json IdentityReport::to_json() const {
  return {{"enumerated", enumerated},
          {"formula", formula},
          {"max_abs_error", max_abs_error},
          {"cases", cases},
          {"ok", ok}};
}

IdentityReport check_incidence(const ConnectionGraph& g, const std::vector<OrientedCycle>& C, double tol) {
  std::uint64_t used = 0;
  std::vector<node_t> nodes;
  double nu = 1;
  std::vector<OrientedCycle> keys;
  for (const auto& c : C) {
    if (used & c.mask()) throw std::invalid_argument("cycles in C must be vertex-disjoint");
    used |= c.mask();
    nodes.insert(nodes.end(), c.nodes.begin(), c.nodes.end());
    nu *= cycle_weight_product(g, c.nodes) * 2.0 * (1.0 - std::cos(cycle_angle(g, c.nodes)));
    keys.push_back(unoriented_key(c));
  }
  const auto ens = enumerate_crsfs(g);
  double hit = 0;
  for (const auto& item : ens.items) {
    bool all = true;
    for (const auto& k : keys)
      all = all && std::binary_search(item.cycles.begin(), item.cycles.end(), k);
    if (all) hit += item.weight;
  }
  IdentityReport r;
  r.enumerated = hit / ens.z;
  const cmatrix inv = SpectralBundle::build(g).delta.inverse();
  const auto k = static_cast<Eigen::Index>(nodes.size());
  cmatrix sub(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = inv(nodes[i], nodes[j]);
  const std::complex<double> det = k ? sub.determinant() : std::complex<double>(1.0);
  r.formula = nu * checked_real(det, "incidence determinant");
  r.max_abs_error = std::abs(r.enumerated - r.formula);
  r.cases = 1;
  r.ok = r.max_abs_error <= tol;
  return r;
}

IdentityReport check_determinantal_kernel(const ConnectionGraph& g, std::size_t max_size, double tol) {
  const node_t n = g.node_count();
  const auto m = static_cast<Eigen::Index>(g.edge_count());
  cmatrix B = cmatrix::Zero(m, n);
  for (Eigen::Index e = 0; e < m; ++e) {
    const Edge& ed = g.edges()[static_cast<std::size_t>(e)];
    const double s = std::sqrt(ed.w);
    B(e, ed.u) = s;
    B(e, ed.v) = -g.phase(ed.u, ed.v) * s;
  }
  const cmatrix K = B * SpectralBundle::build(g).delta.inverse() * B.adjoint();
  const auto ens = enumerate_crsfs(g);

  IdentityReport r;
  std::vector<std::size_t> subset;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    double hit = 0;
    for (const auto& item : ens.items) {
      bool all = true;
      for (std::size_t e : subset) all = all && std::binary_search(item.edges.begin(), item.edges.end(), e);
      if (all) hit += item.weight;
    }
    const double p = hit / ens.z;
    const auto k = static_cast<Eigen::Index>(subset.size());
    cmatrix ks(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) ks(i, j) = K(subset[i], subset[j]);
    const double det = k ? checked_real(ks.determinant(), "kernel minor") : 1.0;
    if (std::abs(p - det) >= r.max_abs_error) {
      r.max_abs_error = std::abs(p - det);
      r.enumerated = p;
      r.formula = det;
    }
    ++r.cases;
    if (subset.size() == max_size) return;
    for (std::size_t e = start; e < static_cast<std::size_t>(m); ++e) {
      subset.push_back(e);
      rec(e + 1);
      subset.pop_back();
    }
  };
  rec(0);
  r.ok = r.max_abs_error <= tol;
  return r;
}

GofResult gof_test(const std::vector<std::uint64_t>& observed, const std::vector<double>& probs) {
  if (observed.size() != probs.size()) throw std::invalid_argument("observed/probability size mismatch");
  double total = 0, mass = 0;
  for (auto o : observed) total += static_cast<double>(o);
  for (double p : probs) mass += p;
  if (total == 0) throw std::invalid_argument("empty sample");
  GofResult r;
  struct Cat {
    double obs, exp;
  };
  std::vector<Cat> kept;
  Cat pool{0, 0};
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double e = total * probs[i] / mass;
    const double o = static_cast<double>(observed[i]);
    if (!(probs[i] > 0)) {
      if (o > 0) {
        r.chi2 = std::numeric_limits<double>::infinity();
        r.p_value = 0;
        return r;
      }
      continue;
    }
    if (e >= 5)
      kept.push_back({o, e});
    else {
      pool.obs += o;
      pool.exp += e;
    }
  }
  if (pool.exp > 0) {
    if (pool.exp < 5 && !kept.empty()) {
      auto smallest = std::min_element(kept.begin(), kept.end(),
                                       [](const Cat& a, const Cat& b) { return a.exp < b.exp; });
      smallest->obs += pool.obs;
      smallest->exp += pool.exp;
    } else {
      kept.push_back(pool);
    }
  }
  r.categories = kept.size();
  for (const auto& c : kept) r.chi2 += (c.obs - c.exp) * (c.obs - c.exp) / c.exp;
  r.dof = static_cast<int>(kept.size()) - 1;
  r.p_value = r.dof > 0 ? boost::math::gamma_q(r.dof / 2.0, r.chi2 / 2.0) : 1.0;
  return r;
}

GofResult poisson_gof(const std::vector<std::uint64_t>& samples, double mean) {
  if (samples.empty()) throw std::invalid_argument("empty sample");
  const std::uint64_t top = *std::max_element(samples.begin(), samples.end());
  std::vector<std::uint64_t> counts(top + 2, 0);
  for (auto s : samples) ++counts[s];
  std::vector<double> probs(top + 2, 0.0);
  double pmf = std::exp(-mean), cdf = 0;
  for (std::uint64_t k = 0; k <= top; ++k) {
    probs[k] = pmf;
    cdf += pmf;
    pmf *= mean / static_cast<double>(k + 1);
  }
  probs[top + 1] = std::max(0.0, 1.0 - cdf);
  return gof_test(counts, probs);
}

std::vector<std::vector<node_t>> stages_decompose(const std::vector<node_t>& succ,
                                                  const std::vector<node_t>& ordering) {
  const std::size_t n = succ.size();
  std::vector<char> covered(n, 0), on_path(n, 0);
  std::vector<std::vector<node_t>> stages;
  for (node_t x : ordering) {
    if (covered[x]) continue;
    std::vector<node_t> path;
    node_t y = x;
    while (y != root_node && !covered[y] && !on_path[y]) {
      on_path[y] = 1;
      path.push_back(y);
      y = succ[y];
    }
    for (node_t v : path) covered[v] = 1;
    stages.push_back(std::move(path));
  }
  return stages;
}

}  // namespace crsf
