#include <doctest.h>

#include <cmath>
#include <set>

#include "crsf/cyclepop.hpp"
#include "crsf/heaps.hpp"
#include "crsf/spectral.hpp"
#include "fixtures.hpp"

using namespace crsf;

namespace {

// All heaps of weight >= cut, deduplicated by canonical form.
struct HeapCensus {
  double heap_sum = 0;     // Σ_H w(H)
  double pyramid_sum = 0;  // Σ_P w(P)/|P|
};

HeapCensus census(const std::vector<OrientedCycle>& cycles, const std::vector<double>& w, double cut) {
  std::set<std::vector<HeapPiece>> seen{{}};
  std::vector<std::pair<CycleHeap, double>> frontier{{CycleHeap{}, 1.0}};
  HeapCensus c;
  c.heap_sum = 1.0;
  while (!frontier.empty()) {
    std::vector<std::pair<CycleHeap, double>> next;
    for (const auto& [h, hw] : frontier)
      for (std::size_t i = 0; i < cycles.size(); ++i) {
        if (!(w[i] > 0) || hw * w[i] < cut) continue;
        CycleHeap g = h;
        g.push(cycles[i]);
        g = g.canonical();
        if (!seen.insert(g.pieces).second) continue;
        const double gw = hw * w[i];
        c.heap_sum += gw;
        if (g.is_pyramid()) c.pyramid_sum += gw / static_cast<double>(g.pieces.size());
        next.emplace_back(std::move(g), gw);
      }
    frontier = std::move(next);
  }
  return c;
}

BasedLoop random_closed_walk(const ConnectionGraph& g, node_t x, std::size_t steps, Rng& rng) {
  BasedLoop l = BasedLoop::trivial(x);
  for (std::size_t i = 0; i < steps || l.nodes.back() != x; ++i) {
    auto arcs = g.arcs(l.nodes.back());
    l.nodes.push_back(arcs[rng.below(arcs.size())].to);
  }
  return l;
}

}  // namespace

TEST_CASE("cycle enumeration sizes") {
  CHECK(enumerate_oriented_cycles(fixtures::two_node()).size() == 1);
  CHECK(enumerate_oriented_cycles(fixtures::path(3)).size() == 2);
  CHECK(enumerate_oriented_cycles(fixtures::k3()).size() == 5);
  CHECK_THROWS_AS(enumerate_oriented_cycles(fixtures::path(13)), enumeration_limit);
}

TEST_CASE("trivial-heap sums") {
  const auto g2 = fixtures::two_node();
  for (double a : {0.1, 0.5, 0.9})
    CHECK(trivial_heap_sum(g2, fixtures::backtrack_alpha(a), 1.0) == doctest::Approx(a).epsilon(1e-14));
  const auto k3 = fixtures::k3();
  const auto det = CycleWeight::determinantal();
  CHECK(std::abs(trivial_heap_sum(k3, det, 1.0) - 0.25) <= 1e-14);
  CHECK(trivial_heap_sum(k3, det, 1.0, {0, 1, 2}) == 1.0);
}

TEST_CASE("generic green function") {
  const auto g2 = fixtures::two_node();
  for (double a : {0.1, 0.5, 0.9})
    CHECK(green_generic(g2, fixtures::backtrack_alpha(a), 1.0, 0) == doctest::Approx(1 / a).epsilon(1e-13));
  const auto k3 = fixtures::k3();
  const auto det = CycleWeight::determinantal();
  CHECK(green_generic(k3, det, 1.0, 0, {1, 2}) == 1.0);
  CHECK(green_generic(k3, det, 1.0, 2) == doctest::Approx(3.0).epsilon(1e-13));
}

TEST_CASE("generic MGF") {
  const auto g2 = fixtures::two_node();
  for (double a : {0.1, 0.5, 0.9}) {
    for (auto [t, v] : mgf_generic(g2, fixtures::backtrack_alpha(a), default_t_grid()))
      CHECK(std::abs(v - a * t * t / (1 - (1 - a) * t * t)) <= 1e-12);
    const auto law = tlaw_generic(g2, fixtures::backtrack_alpha(a));
    CHECK(std::abs(law.mean - 2 / a) <= 1e-12);
    // T = 2 + 2·Geometric failures
    CHECK(law.variance == doctest::Approx(4 * (1 - a) / (a * a)).epsilon(1e-12));
    CHECK_FALSE(law.parity.has_value());
  }
  const auto k3 = fixtures::k3();
  const auto det = CycleWeight::determinantal();
  const auto spectral = tlaw_crsf(k3);
  const auto generic = mgf_generic(k3, det, default_t_grid());
  for (std::size_t i = 0; i < generic.size(); ++i)
    CHECK(std::abs(generic[i].second - spectral.mgf[i].second) <= 1e-9);
  CHECK(generic.back().second == doctest::Approx(1.0));
}

TEST_CASE("generic and determinantal engines agree on random graphs") {
  Rng rng(51);
  const auto det = CycleWeight::determinantal();
  for (int rep = 0; rep < 20; ++rep) {
    const auto g = fixtures::random_assumption_graph(3 + static_cast<node_t>(rng.below(4)), rng);
    const node_t n = g.node_count();
    const auto law = tlaw_crsf(g);
    const auto gen = tlaw_generic(g, det);
    CHECK(gen.mean == doctest::Approx(law.mean).epsilon(1e-9));
    CHECK(gen.variance == doctest::Approx(law.variance).epsilon(1e-9));
    const auto b = SpectralBundle::build(g);
    for (double t : default_t_grid()) {
      const double direct = (cmatrix::Identity(n, n) - t * b.pi).determinant().real();
      CHECK(std::abs(trivial_heap_sum(g, det, t) - direct) <= 1e-9);
      CHECK(std::abs(green_generic(g, det, t, 0, {n - 1}) - green_det(g, t, 0, {n - 1})) <= 1e-9);
    }
  }
}

TEST_CASE("product of generic greens is order independent") {
  Rng rng(52);
  for (int rep = 0; rep < 5; ++rep) {
    const auto g = fixtures::random_assumption_graph(5, rng);
    CycleWeight::Table tab;
    for (const auto& c : enumerate_oriented_cycles(g)) tab[c.nodes] = rng.uniform();
    const auto a = CycleWeight::explicit_table(tab);
    const double target = 1.0 / trivial_heap_sum(g, a, 1.0);
    std::vector<node_t> order = fixtures::all_nodes(g);
    do {
      double prod = 1;
      std::vector<node_t> avoid;
      for (node_t x : order) {
        prod *= green_generic(g, a, 1.0, x, avoid);
        avoid.push_back(x);
      }
      CHECK(prod == doctest::Approx(target).epsilon(1e-10));
    } while (std::next_permutation(order.begin(), order.end()));
  }
}

TEST_CASE("heap inversion and pyramid identities") {
  SUBCASE("2-node graph") {
    const auto g = fixtures::two_node();
    const auto a = fixtures::backtrack_alpha(0.4);
    const auto cycles = enumerate_oriented_cycles(g);
    const auto c = census(cycles, piece_weights(g, a, cycles, 1.0), 1e-13);
    const double z = trivial_heap_sum(g, a, 1.0);
    CHECK(std::abs(c.heap_sum - 1 / z) <= 1e-8);
    CHECK(std::abs(c.pyramid_sum - std::log(1 / z)) <= 1e-8);
  }
  SUBCASE("K4 at small t") {
    // truncation leaves a tail far below the tolerances
    const auto g = fixtures::k4();
    const auto det = CycleWeight::determinantal();
    const auto cycles = enumerate_oriented_cycles(g);
    const auto c = census(cycles, piece_weights(g, det, cycles, 0.1), 1e-12);
    const double z = trivial_heap_sum(g, det, 0.1);
    CHECK(c.heap_sum == doctest::Approx(1 / z).epsilon(1e-8));
    CHECK(c.pyramid_sum == doctest::Approx(std::log(1 / z)).epsilon(1e-7));
  }
}

TEST_CASE("pyramid of the two-backtrack grid loop") {
  const BasedLoop loop{fixtures::grid_loop_two_backtracks};
  const auto h = pyramid_from_loop(loop);
  REQUIRE(h.pieces.size() == 3);
  CHECK(h.pieces[0] == HeapPiece{{1, 2}, 1});
  CHECK(h.pieces[1] == HeapPiece{{4, 7}, 1});
  CHECK(h.pieces[2] == HeapPiece{{0, 1, 4, 3}, 2});
  CHECK(h.is_pyramid());
  CHECK(h.maximal() == std::vector<std::size_t>{2});
  CHECK(loop_from_pyramid(h, 0) == loop);
  // an isomorphic labelling with a higher top level is the same heap
  CycleHeap iso = h;
  iso.pieces[2].level = 4;
  CHECK(iso == h);
}

TEST_CASE("pyramid of the repeated-square grid loop") {
  const BasedLoop loop{fixtures::grid_loop_with_repeat};
  const auto h = pyramid_from_loop(loop);
  REQUIRE(h.pieces.size() == 4);
  CHECK(h.pieces[3].level == 4);
  CHECK(h.is_pyramid());
  CHECK(h.total_length() == 4 + 4 + 4 + 8);
  CHECK(loop_from_pyramid(h, 0) == loop);
  CHECK(loop_from_pyramid(h, 8).base() == 8);
}

TEST_CASE("single backtrack pyramid") {
  const auto h = pyramid_from_loop({{2, 3, 2}});
  CHECK(h.pieces.size() == 1);
  CHECK(h.is_pyramid());
}

TEST_CASE("loop/pyramid round trip on K4") {
  Rng rng(53);
  const auto g = fixtures::k4();
  for (int rep = 0; rep < 1000; ++rep) {
    const node_t x = static_cast<node_t>(rng.below(4));
    const auto loop = random_closed_walk(g, x, 1 + rng.below(12), rng);
    const auto h = pyramid_from_loop(loop);
    REQUIRE(h.is_pyramid());
    CHECK(h.total_length() == loop.length());
    CHECK(loop_from_pyramid(h, x) == loop);
    CHECK(loop_from_pyramid(h.canonical(), x) == loop);
  }
}

TEST_CASE("heap decomposition") {
  const std::vector<node_t> order{0, 1, 2, 3};
  for (const auto& p : decompose_heap(CycleHeap{}, order)) CHECK(p.pieces.empty());

  const auto pyr = pyramid_from_loop({{0, 1, 0, 2, 3, 2, 0}});
  const auto parts = decompose_heap(pyr, order);
  REQUIRE(parts.size() == 3);
  CHECK(parts[0] == pyr);
  CHECK(parts[1].pieces.empty());
  CHECK(parts[2].pieces.empty());
}

TEST_CASE("popped heaps split into the per-node pyramids") {
  const auto g = fixtures::k4();
  const auto det = CycleWeight::determinantal();
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto [loops, f] = sample_verbose(g, det, {.seed = s});
    std::vector<node_t> order;
    for (const auto& st : f.stages) order.insert(order.end(), st.begin(), st.end());
    CycleHeap heap;
    for (const auto& l : loops.loops)
      for (const auto& c : erase_cycles(l)) heap.push(c);
    const auto parts = decompose_heap(heap, order);
    REQUIRE(parts.size() == 3);
    CHECK(compose(parts) == heap);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (loops.loops[i].is_trivial()) CHECK(parts[i].pieces.empty());
      else CHECK(parts[i] == pyramid_from_loop(loops.loops[i]));
    }
    CHECK(loops.loops.back().is_trivial());
  }
}
