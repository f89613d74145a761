#include "crsf/heaps.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <string>

namespace crsf {

std::vector<OrientedCycle> enumerate_oriented_cycles(const ConnectionGraph& g, node_t limit) {
  if (g.node_count() > limit)
    throw enumeration_limit("cycle enumeration limited to " + std::to_string(limit) + " nodes");
  std::vector<OrientedCycle> out;
  for_each_simple_cycle(g, static_cast<std::size_t>(g.node_count()), [&](const std::vector<node_t>& c) {
    out.emplace_back(c);
    return true;
  });
  std::sort(out.begin(), out.end());
  return out;
}

bool concurrent(const OrientedCycle& a, const OrientedCycle& b) {
  for (node_t x : a.nodes)
    if (b.contains(x)) return true;
  return false;
}

void CycleHeap::push(const OrientedCycle& c) {
  int level = 0;
  for (const auto& p : pieces)
    if (concurrent(p.cycle, c)) level = std::max(level, p.level);
  pieces.push_back({c, level + 1});
}

CycleHeap CycleHeap::canonical() const {
  std::vector<HeapPiece> sorted = pieces;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const HeapPiece& a, const HeapPiece& b) { return a.level < b.level; });
  CycleHeap out;
  for (const auto& p : sorted) out.push(p.cycle);
  std::sort(out.pieces.begin(), out.pieces.end());
  return out;
}

std::vector<std::size_t> CycleHeap::maximal() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    bool top = true;
    for (std::size_t j = 0; j < pieces.size() && top; ++j)
      if (j != i && pieces[j].level > pieces[i].level && concurrent(pieces[i].cycle, pieces[j].cycle))
        top = false;
    if (top) out.push_back(i);
  }
  return out;
}

std::size_t CycleHeap::total_length() const {
  std::size_t s = 0;
  for (const auto& p : pieces) s += p.cycle.size();
  return s;
}

CycleHeap pyramid_from_loop(const BasedLoop& loop) {
  CycleHeap h;
  for (const OrientedCycle& c : erase_cycles(loop)) h.push(c);
  return h;
}

BasedLoop loop_from_pyramid(const CycleHeap& pyramid, node_t x) {
  auto top = pyramid.maximal();
  if (top.size() != 1) throw std::invalid_argument("heap is not a pyramid");
  if (!pyramid.pieces[top[0]].cycle.contains(x))
    throw std::invalid_argument("base node is not in the maximal piece");

  const auto& pieces = pyramid.pieces;
  std::vector<std::size_t> done(pieces.size(), 0);
  std::size_t remaining = pyramid.total_length();
  BasedLoop loop = BasedLoop::trivial(x);
  node_t u = x;
  while (remaining > 0) {
    // the lowest piece through u that still has unvisited edges
    std::size_t best = pieces.size();
    for (std::size_t i = 0; i < pieces.size(); ++i)
      if (done[i] < pieces[i].cycle.size() && pieces[i].cycle.contains(u) &&
          (best == pieces.size() || pieces[i].level < pieces[best].level))
        best = i;
    if (best == pieces.size()) throw std::invalid_argument("pyramid does not describe a loop");
    const auto& nodes = pieces[best].cycle.nodes;
    auto at = std::find(nodes.begin(), nodes.end(), u) - nodes.begin();
    u = nodes[(static_cast<std::size_t>(at) + 1) % nodes.size()];
    ++done[best];
    --remaining;
    loop.nodes.push_back(u);
  }
  if (u != x) throw std::invalid_argument("pyramid does not describe a loop");
  return loop;
}

std::vector<CycleHeap> decompose_heap(const CycleHeap& heap, std::span<const node_t> ordering) {
  const auto& pieces = heap.pieces;
  std::vector<char> taken(pieces.size(), 0);
  std::vector<CycleHeap> out;
  for (std::size_t i = 0; i + 1 < ordering.size(); ++i) {
    const node_t x = ordering[i];
    std::size_t top = pieces.size();
    for (std::size_t j = 0; j < pieces.size(); ++j)
      if (!taken[j] && pieces[j].cycle.contains(x) &&
          (top == pieces.size() || pieces[j].level > pieces[top].level))
        top = j;
    CycleHeap p;
    if (top != pieces.size()) {
      std::vector<std::size_t> stack{top};
      std::vector<std::size_t> below;
      taken[top] = 1;
      while (!stack.empty()) {
        std::size_t a = stack.back();
        stack.pop_back();
        below.push_back(a);
        for (std::size_t b = 0; b < pieces.size(); ++b)
          if (!taken[b] && pieces[b].level < pieces[a].level &&
              concurrent(pieces[a].cycle, pieces[b].cycle)) {
            taken[b] = 1;
            stack.push_back(b);
          }
      }
      std::sort(below.begin(), below.end());
      for (std::size_t a : below) p.pieces.push_back(pieces[a]);
      p = p.canonical();
    }
    out.push_back(std::move(p));
  }
  return out;
}

CycleHeap compose(std::span<const CycleHeap> heaps) {
  CycleHeap out;
  for (const CycleHeap& h : heaps) {
    std::vector<HeapPiece> sorted = h.pieces;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const HeapPiece& a, const HeapPiece& b) { return a.level < b.level; });
    for (const auto& p : sorted) out.push(p.cycle);
  }
  return out;
}

TrivialHeapSum::TrivialHeapSum(std::vector<OrientedCycle> cycles) : cycles_(std::move(cycles)) {
  node_t top = 0;
  for (const auto& c : cycles_)
    for (node_t x : c.nodes) top = std::max(top, x);
  if (top >= 63) throw enumeration_limit("trivial-heap sums need fewer than 64 nodes");
  by_min_.resize(static_cast<std::size_t>(top) + 1);
  for (std::size_t i = 0; i < cycles_.size(); ++i) {
    mask_.push_back(cycles_[i].mask());
    by_min_[static_cast<std::size_t>(cycles_[i].nodes.front())].push_back(i);
  }
}

double TrivialHeapSum::sum(const std::vector<double>& w, std::uint64_t avail) const {
  std::unordered_map<std::uint64_t, double> memo;
  std::function<double(std::uint64_t)> f = [&](std::uint64_t s) -> double {
    if (s == 0) return 1.0;
    if (auto it = memo.find(s); it != memo.end()) return it->second;
    const int v = std::countr_zero(s);
    double r = f(s & ~(std::uint64_t{1} << v));
    if (static_cast<std::size_t>(v) < by_min_.size())
      for (std::size_t c : by_min_[static_cast<std::size_t>(v)])
        if ((mask_[c] & ~s) == 0 && w[c] != 0) r -= w[c] * f(s & ~mask_[c]);
    memo.emplace(s, r);
    return r;
  };
  return f(avail);
}

TrivialHeapSum::Moments TrivialHeapSum::moments(const std::vector<double>& w,
                                                std::uint64_t avail) const {
  std::unordered_map<std::uint64_t, Moments> memo;
  std::function<Moments(std::uint64_t)> f = [&](std::uint64_t s) -> Moments {
    if (s == 0) return {1.0, 0.0, 0.0};
    if (auto it = memo.find(s); it != memo.end()) return it->second;
    const int v = std::countr_zero(s);
    Moments r = f(s & ~(std::uint64_t{1} << v));
    if (static_cast<std::size_t>(v) < by_min_.size())
      for (std::size_t c : by_min_[static_cast<std::size_t>(v)]) {
        if ((mask_[c] & ~s) != 0 || w[c] == 0) continue;
        const Moments m = f(s & ~mask_[c]);
        const double l = static_cast<double>(cycles_[c].size());
        r.z0 -= w[c] * m.z0;
        r.z1 -= w[c] * (l * m.z0 + m.z1);
        r.z2 -= w[c] * (l * l * m.z0 + 2 * l * m.z1 + m.z2);
      }
    memo.emplace(s, r);
    return r;
  };
  return f(avail);
}

std::uint64_t node_mask(node_t n, const std::vector<node_t>& avoid) {
  if (n >= 64) throw enumeration_limit("node masks need fewer than 64 nodes");
  std::uint64_t m = n == 63 ? ~std::uint64_t{0} >> 1 : (std::uint64_t{1} << n) - 1;
  for (node_t x : avoid) m &= ~(std::uint64_t{1} << x);
  return m;
}

std::vector<double> piece_weights(const ConnectionGraph& g, const CycleWeight& a,
                                  const std::vector<OrientedCycle>& cycles, double t) {
  std::vector<double> w;
  w.reserve(cycles.size());
  for (const auto& c : cycles)
    w.push_back(std::pow(t, static_cast<double>(c.size())) * cycle_transition_product(g, c.nodes) *
                (1.0 - a.of(g, c)));
  return w;
}

double trivial_heap_sum(const ConnectionGraph& g, const CycleWeight& a, double t,
                        const std::vector<node_t>& avoid) {
  TrivialHeapSum engine(enumerate_oriented_cycles(g));
  return engine.sum(piece_weights(g, a, engine.cycles(), t), node_mask(g.node_count(), avoid));
}

double green_generic(const ConnectionGraph& g, const CycleWeight& a, double t, node_t x,
                     const std::vector<node_t>& avoid) {
  if (std::find(avoid.begin(), avoid.end(), x) != avoid.end())
    throw std::invalid_argument("x belongs to the avoided set");
  TrivialHeapSum engine(enumerate_oriented_cycles(g));
  auto w = piece_weights(g, a, engine.cycles(), t);
  const std::uint64_t s = node_mask(g.node_count(), avoid);
  const double den = engine.sum(w, s);
  if (!(std::abs(den) > 1e-300)) throw std::domain_error("trivial-heap sum vanishes");
  return engine.sum(w, s & ~(std::uint64_t{1} << x)) / den;
}

std::vector<std::pair<double, double>> mgf_generic(const ConnectionGraph& g, const CycleWeight& a,
                                                   const std::vector<double>& t_grid) {
  TrivialHeapSum engine(enumerate_oriented_cycles(g));
  const std::uint64_t all = node_mask(g.node_count());
  const double z1 = engine.sum(piece_weights(g, a, engine.cycles(), 1.0), all);
  std::vector<std::pair<double, double>> out;
  for (double t : t_grid) {
    if (!(t > 0 && t <= 1)) throw std::invalid_argument("generic MGF needs t in (0,1]");
    const double zt = engine.sum(piece_weights(g, a, engine.cycles(), t), all);
    if (!(std::abs(zt) > 1e-300)) throw std::domain_error("trivial-heap sum vanishes");
    out.emplace_back(t, std::pow(t, g.node_count()) * z1 / zt);
  }
  return out;
}

TLawReport tlaw_generic(const ConnectionGraph& g, const CycleWeight& a,
                        const std::vector<double>& t_grid) {
  TrivialHeapSum engine(enumerate_oriented_cycles(g));
  auto m = engine.moments(piece_weights(g, a, engine.cycles(), 1.0), node_mask(g.node_count()));
  if (!(m.z0 > 0)) throw std::domain_error("normalization vanishes (no cycle can be accepted)");
  TLawReport r;
  r.mode = a.mode() == CycleWeight::Mode::determinantal ? "CRSF" : "CRSF(explicit-alpha)";
  const double d1 = m.z1 / m.z0;
  r.mean = g.node_count() - d1;
  r.variance = -(m.z2 / m.z0 - d1 * d1);
  r.mgf = mgf_generic(g, a, t_grid);
  return r;
}

}  // namespace crsf
