#include "crsf/prs.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <string>

#include "crsf/rng.hpp"

namespace crsf {

PrsInstance PrsInstance::build(const ConnectionGraph& g, const CycleWeight& a,
                               std::vector<std::size_t> sigma) {
  PrsInstance inst;
  inst.g = &g;
  inst.cycles = enumerate_oriented_cycles(g);
  for (std::size_t i = 0; i < inst.cycles.size(); ++i) {
    inst.alpha.push_back(a.of(g, inst.cycles[i]));
    inst.index[inst.cycles[i].nodes] = i;
  }
  const std::size_t p = inst.cycles.size();
  if (sigma.empty()) {
    sigma.resize(p);
    std::iota(sigma.begin(), sigma.end(), 0);
  }
  std::vector<char> seen(p, 0);
  if (sigma.size() != p) throw std::invalid_argument("constraint order must be a permutation");
  for (std::size_t c : sigma) {
    if (c >= p || seen[c]) throw std::invalid_argument("constraint order must be a permutation");
    seen[c] = 1;
  }
  inst.order = std::move(sigma);
  inst.rank.assign(p, 0);
  for (std::size_t k = 0; k < p; ++k) inst.rank[inst.order[k]] = k;
  return inst;
}

CycleHeap PrsTrace::heap(const PrsInstance& inst) const {
  CycleHeap h;
  for (std::size_t e : events) h.push(inst.cycles[e]);
  return h;
}

void PrsTrace::write_csv(std::ostream& out, const PrsInstance& inst) const {
  out << "constraint_id,cycle_length,resample_count\n";
  for (std::size_t i = 0; i < resample_counts.size(); ++i)
    out << i << ',' << inst.cycles[i].size() << ',' << resample_counts[i] << '\n';
}

namespace {

node_t draw_successor(const ConnectionGraph& g, node_t x, Rng& rng) {
  auto arcs = g.arcs(x);
  const double u = rng.uniform() * g.degree(x);
  auto it = std::upper_bound(arcs.begin(), arcs.end(), u,
                             [](double v, const Arc& a) { return v < a.cum; });
  if (it == arcs.end()) --it;
  return it->to;
}

std::size_t constraint_of(const PrsInstance& inst, const OrientedCycle& c) {
  auto it = inst.index.find(c.nodes);
  if (it == inst.index.end()) throw prs_error("cycle " + to_string(c) + " is not a constraint");
  return it->second;
}

}  // namespace

std::pair<PrsTrace, OrientedCrsf> prs_run(const PrsInstance& inst, std::uint64_t seed,
                                          std::optional<std::uint64_t> max_steps) {
  const ConnectionGraph& g = *inst.g;
  const node_t n = g.node_count();
  Rng rng(seed);
  std::vector<node_t> v(n);
  for (node_t x = 0; x < n; ++x) v[x] = draw_successor(g, x, rng);
  std::vector<char> b(inst.cycles.size());
  for (std::size_t l = 0; l < b.size(); ++l) b[l] = rng.bernoulli(inst.alpha[l]);

  PrsTrace trace;
  trace.resample_counts.assign(inst.cycles.size(), 0);
  while (true) {
    // cycles of a functional graph are node-disjoint, so violated scopes are too
    std::vector<OrientedCycle> present = functional_cycles(v);
    std::uint64_t used = 0;
    std::size_t pick = inst.cycles.size();
    for (const auto& c : present) {
      const std::uint64_t m = c.mask();
      if (used & m) throw prs_error("violated constraints share a node (extremality broken)");
      used |= m;
      const std::size_t l = constraint_of(inst, c);
      if (!b[l] && (pick == inst.cycles.size() || inst.rank[l] < inst.rank[pick])) pick = l;
    }
    if (pick == inst.cycles.size()) break;
    if (max_steps && trace.total >= *max_steps) throw prs_error("PRS step cap exceeded");
    for (node_t x : inst.cycles[pick].nodes) v[x] = draw_successor(g, x, rng);
    b[pick] = rng.bernoulli(inst.alpha[pick]);
    ++trace.resample_counts[pick];
    ++trace.total;
    trace.events.push_back(pick);
  }
  trace.final_successor = v;
  trace.final_bits = b;
  OrientedCrsf crsf;
  crsf.successor = v;
  crsf.cycles = functional_cycles(v);
  crsf.steps_taken = trace.total;
  return {std::move(trace), std::move(crsf)};
}

PrsExact resample_stats_exact(const PrsInstance& inst, double bound) {
  const ConnectionGraph& g = *inst.g;
  const node_t n = g.node_count();
  double size = 1;
  for (node_t x = 0; x < n; ++x) size *= static_cast<double>(g.arcs(x).size());
  if (size > bound) throw enumeration_limit("product space too large for exact PRS statistics");

  std::vector<std::size_t> digit(n, 0);
  std::vector<node_t> v(n);
  std::vector<double> bad_single(inst.cycles.size(), 0.0);
  double p_true = 0, p_one_bad = 0;
  while (true) {
    double pv = 1;
    for (node_t x = 0; x < n; ++x) {
      const Arc& a = g.arcs(x)[digit[x]];
      v[x] = a.to;
      pv *= a.w / g.degree(x);
    }
    std::vector<std::size_t> present;
    for (const auto& c : functional_cycles(v)) present.push_back(constraint_of(inst, c));
    // P(all present bits are 1) and P(exactly bit l is 0)
    double all_ok = pv;
    for (std::size_t l : present) all_ok *= inst.alpha[l];
    p_true += all_ok;
    for (std::size_t l : present) {
      double p = pv * (1.0 - inst.alpha[l]);
      for (std::size_t k : present)
        if (k != l) p *= inst.alpha[k];
      bad_single[l] += p;
      p_one_bad += p;
    }
    node_t x = 0;
    while (x < n && ++digit[x] == g.arcs(x).size()) digit[x++] = 0;
    if (x == n) break;
  }
  if (!(p_true > 0)) throw std::domain_error("constraints cannot be satisfied");
  PrsExact out;
  out.p_satisfied = p_true;
  out.total = p_one_bad / p_true;
  for (double p : bad_single) out.per_constraint.push_back(p / p_true);
  return out;
}

double resample_count_mgf(const PrsInstance& inst, const std::vector<double>& t) {
  if (t.size() != inst.cycles.size()) throw std::invalid_argument("one t per constraint expected");
  TrivialHeapSum engine(inst.cycles);
  std::vector<double> w1, wt;
  for (std::size_t l = 0; l < inst.cycles.size(); ++l) {
    const double w = cycle_transition_product(*inst.g, inst.cycles[l].nodes) * (1.0 - inst.alpha[l]);
    w1.push_back(w);
    wt.push_back(w * t[l]);
  }
  const std::uint64_t all = node_mask(inst.g->node_count());
  return engine.sum(w1, all) / engine.sum(wt, all);
}

}  // namespace crsf
