#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "crsf/graph.hpp"
#include "crsf/rng.hpp"
#include "fixtures.hpp"

using namespace crsf;
using std::numbers::pi;

TEST_CASE("smallest edge list parses") {
  std::istringstream in("2\n0 1 1.0 0.0\n");
  const auto g = load_graph(in);
  CHECK(g.node_count() == 2);
  CHECK(g.edge_count() == 1);
  CHECK(g.degree(0) == 1.0);
  CHECK(g.degree(1) == 1.0);
}

TEST_CASE("reverse angle is the negation mod 2pi") {
  const auto g = fixtures::k3();
  for (node_t x = 0; x < 3; ++x) CHECK(g.degree(x) == 2.0);
  CHECK(g.reference_angle(1, 0) == doctest::Approx(3 * pi / 2).epsilon(1e-14));
  CHECK(g.reference_angle(0, 1) == doctest::Approx(pi / 2).epsilon(1e-14));
}

TEST_CASE("bad edge lists are rejected with a line number") {
  std::istringstream self_loop("3\n0 1 1 0\n1 1 1.0 0.0\n");
  try {
    load_graph(self_loop);
    FAIL("self-loop accepted");
  } catch (const graph_error& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream dup("2\n0 1 1 0\n1 0 1 0\n");
  CHECK_THROWS_AS(load_graph(dup), graph_error);
  std::istringstream neg("2\n0 1 -1 0\n");
  CHECK_THROWS_AS(load_graph(neg), graph_error);
  std::istringstream disconnected("4\n0 1 1 0\n2 3 1 0\n");
  CHECK_THROWS_AS(load_graph(disconnected), graph_error);
  std::istringstream junk("2\n0 1 one 0\n");
  CHECK_THROWS_AS(load_graph(junk), graph_error);
}

TEST_CASE("json round trip") {
  const auto g = fixtures::k4();
  std::istringstream in(g.to_json().dump());
  const auto h = load_graph(in, GraphFormat::json);
  REQUIRE(h.edge_count() == g.edge_count());
  for (std::size_t i = 0; i < g.edge_count(); ++i) {
    CHECK(h.edges()[i].u == g.edges()[i].u);
    CHECK(h.edges()[i].w == g.edges()[i].w);
    CHECK(h.edges()[i].theta == doctest::Approx(g.edges()[i].theta));
  }
  std::ostringstream el;
  save_edge_list(el, g);
  std::istringstream back(el.str());
  CHECK(load_graph(back).edge_count() == 6);
}

TEST_CASE("holonomy of backtracks, triangles and reversals") {
  const auto g = fixtures::k3();
  const std::vector<node_t> back{0, 1, 0};
  CHECK(holonomy(g, back) == std::complex<double>(1.0, 0.0));

  const OrientedCycle tri{0, 1, 2};
  const auto h = holonomy(g, tri);
  CHECK(h.real() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(h.imag() == doctest::Approx(-1.0));
  const auto r = holonomy(g, tri.reversed());
  CHECK(std::abs(r - std::conj(h)) < 1e-15);
}

TEST_CASE("phase antisymmetry and stochastic rows on random graphs") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const auto g = fixtures::random_assumption_graph(6, rng);
    for (node_t x = 0; x < g.node_count(); ++x) {
      double s = 0;
      for (const auto& a : g.arcs(x)) {
        CHECK(std::abs(g.phase(x, a.to) * g.phase(a.to, x) - 1.0) < 1e-12);
        s += g.transition(x, a.to);
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("canonical cycles") {
  CHECK(OrientedCycle{2, 0, 1}.nodes == std::vector<node_t>{0, 1, 2});
  CHECK(OrientedCycle{0, 2, 1} != OrientedCycle{0, 1, 2});
  CHECK(OrientedCycle{1, 0} == OrientedCycle{0, 1});
  CHECK(OrientedCycle{1, 0}.reversed() == OrientedCycle{0, 1});
  CHECK(OrientedCycle{0, 1, 2}.reversed() == OrientedCycle{0, 2, 1});
  CHECK(OrientedCycle{3, 1}.mask() == 0b1010u);
}

TEST_CASE("cycle weights") {
  const auto g = fixtures::k3();
  const auto det = CycleWeight::determinantal();
  for (const auto& e : g.edges()) CHECK(det.of(g, OrientedCycle{e.u, e.v}) == 0.0);
  CHECK(det.of(g, OrientedCycle{0, 1, 2}) == doctest::Approx(1.0));
  CHECK_THROWS(CycleWeight::explicit_table({{{0, 1}, 1.5}}));
  const auto tab = CycleWeight::explicit_table({{{1, 0}, 0.25}});
  CHECK(tab.of(g, OrientedCycle{0, 1}) == 0.25);
  CHECK(tab.of(g, OrientedCycle{1, 2}) == 0.0);
}

TEST_CASE("alpha file") {
  std::istringstream in("# comment\n0.5 0 1\n1.0 2 0 1\n");
  const auto a = load_alpha(in);
  const auto g = fixtures::k3();
  CHECK(a.of(g, OrientedCycle{1, 0}) == 0.5);
  CHECK(a.of(g, OrientedCycle{0, 1, 2}) == 1.0);
  CHECK(a.of(g, OrientedCycle{0, 2, 1}) == 0.0);
}

TEST_CASE("assumption report") {
  const auto det = CycleWeight::determinantal();
  const auto flat = validate_assumptions(fixtures::k3(0.0), det);
  CHECK_FALSE(flat.nontrivial_connection);

  const auto ok = validate_assumptions(fixtures::k3(), det);
  CHECK(ok.nontrivial_connection);
  CHECK(ok.weakly_inconsistent);
  CHECK(ok.nontrivial_weights);
  CHECK(ok.check_level == "full-enumeration");

  const auto obtuse = validate_assumptions(fixtures::k3(2 * pi / 3), det);
  CHECK_FALSE(obtuse.weakly_inconsistent);

  const auto path = validate_assumptions(fixtures::path(4), det);
  CHECK_FALSE(path.nontrivial_connection);
}

TEST_CASE("assumption report on a large graph falls back to a cycle basis") {
  std::vector<Edge> e;
  const node_t n = 20;
  for (node_t i = 0; i < n; ++i) e.push_back({i, static_cast<node_t>((i + 1) % n), 1.0, 0.0});
  for (node_t i = 0; i + 5 < n; i += 3) e.push_back({i, static_cast<node_t>(i + 5), 1.0, 0.0});
  e[0].theta = pi / 3;
  const ConnectionGraph g(n, e);
  const auto rep = validate_assumptions(g, CycleWeight::determinantal());
  CHECK(rep.check_level == "cycle-basis+bounded-length");
  CHECK(rep.nontrivial_connection);
  CHECK(rep.weakly_inconsistent);
}

TEST_CASE("simple cycle enumeration counts") {
  std::size_t count = 0;
  for_each_simple_cycle(fixtures::k3(), 12, [&](const std::vector<node_t>&) {
    ++count;
    return true;
  });
  CHECK(count == 5);
  count = 0;
  // K4: 6 backtracks, 4 triangles and 3 squares, both orientations
  for_each_simple_cycle(fixtures::k4(), 12, [&](const std::vector<node_t>&) {
    ++count;
    return true;
  });
  CHECK(count == 6 + 2 * 4 + 2 * 3);
}

TEST_CASE("rng determinism and range") {
  Rng a(5), b(5), c(6);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
  }
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7u);
  }
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}
