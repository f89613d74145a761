#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crsf/rng.hpp"
#include "crsf/spectral.hpp"
#include "fixtures.hpp"

using namespace crsf;
using fixtures::all_nodes;
using fixtures::cofactor_oracle;

TEST_CASE("K3 with a quarter-turn edge: cofactor oracle") {
  const auto g = fixtures::k3();
  const auto oracle = cofactor_oracle(g);
  CHECK(oracle.det_delta == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(oracle.mean == doctest::Approx(9.0).epsilon(1e-14));
  CHECK(oracle.parity == doctest::Approx(-1.0).epsilon(1e-14));

  const auto law = tlaw_crsf(g);
  CHECK(std::abs(law.mean - oracle.mean) <= 1e-12);
  REQUIRE(law.parity.has_value());
  CHECK(std::abs(*law.parity - oracle.parity) <= 1e-12);
  CHECK(law.mgf.back().second == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("principal minors") {
  const auto b = SpectralBundle::build(fixtures::k3());
  CHECK(std::abs(principal_minor_det(b.delta, {}) - 2.0) < 1e-13);
  CHECK(principal_minor_det(b.delta, {0, 1, 2}) == std::complex<double>(1.0));
  const auto flat = SpectralBundle::build(fixtures::k4(0.0));
  CHECK(std::abs(principal_minor_det(flat.lambda.cast<std::complex<double>>(), {})) < 1e-12);
}

TEST_CASE("green function values") {
  const auto g = fixtures::k3();
  CHECK(green_det(g, 1.0, 0, {1, 2}) == doctest::Approx(1.0));
  CHECK(green_det(g, 1.0, 2, {}) == doctest::Approx(3.0).epsilon(1e-13));
  for (node_t x = 0; x < 3; ++x) CHECK(green_det(g, 1e-9, x, {}) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK_THROWS_AS(green_det(g, 1.0, 0, {0}), std::invalid_argument);
  CHECK_THROWS_AS(green_det(fixtures::k3(0.0), 1.0, 0, {}), spectral_error);
}

TEST_CASE("tree and forest laws") {
  CHECK(tlaw(fixtures::path(2), LawSpec::tree(1)).mean == doctest::Approx(1.0));
  CHECK(tlaw(fixtures::path(3), LawSpec::tree(2)).mean == doctest::Approx(4.0).epsilon(1e-13));
  const auto big = tlaw(fixtures::k4(), LawSpec::mtsf(1e9));
  CHECK(big.mean == doctest::Approx(4.0).epsilon(1e-6));
  const auto forest = tlaw(fixtures::k4(), LawSpec::forest(0.5));
  CHECK(forest.mgf.back().second == doctest::Approx(1.0).epsilon(1e-13));
  CHECK_THROWS_AS(tlaw(fixtures::k4(), LawSpec::mtsf(0.0)), std::invalid_argument);
  CHECK_THROWS_AS(tlaw(fixtures::k4(), LawSpec::tree(7)), std::invalid_argument);
}

TEST_CASE("mean equals Tr(D Δ⁻¹) on random graphs") {
  Rng rng(21);
  for (int rep = 0; rep < 30; ++rep) {
    const auto g = fixtures::random_assumption_graph(6, rng);
    const auto b = SpectralBundle::build(g);
    const cmatrix inv = b.delta.inverse();
    const double direct = (b.deg.cast<std::complex<double>>().asDiagonal() * inv).trace().real();
    CHECK(tlaw_crsf(g).mean == doctest::Approx(direct).epsilon(1e-9));
    CHECK(cofactor_oracle(g).mean == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("mgf derivatives match mean and variance") {
  Rng rng(22);
  const double h = 1e-5;
  for (int rep = 0; rep < 10; ++rep) {
    const auto g = fixtures::random_assumption_graph(5, rng);
    for (const auto& spec : {LawSpec::crsf(), LawSpec::mtsf(0.3), LawSpec::forest(0.3), LawSpec::tree(0)}) {
      const auto law = tlaw(g, spec, {});
      auto f = [&](double s) { return std::log(mgf_det(g, spec, std::exp(s))); };
      // one-sided stencils of third order, points at s = 0, -h, ..., -4h
      const double f0 = f(0), f1 = f(-h), f2 = f(-2 * h), f3 = f(-3 * h), f4 = f(-4 * h);
      const double d1 = (11 * f0 - 18 * f1 + 9 * f2 - 2 * f3) / (6 * h);
      const double d2 = (35 * f0 - 104 * f1 + 114 * f2 - 56 * f3 + 11 * f4) / (12 * h * h);
      CHECK(d1 == doctest::Approx(law.mean).epsilon(1e-4));
      CHECK(d2 == doctest::Approx(law.variance).epsilon(1e-3));
    }
  }
}

TEST_CASE("telescoping product of greens is order independent") {
  Rng rng(23);
  for (int rep = 0; rep < 10; ++rep) {
    const auto g = fixtures::random_assumption_graph(5, rng);
    const auto b = SpectralBundle::build(g);
    const double target =
        1.0 / (cmatrix::Identity(5, 5) - b.pi).determinant().real();
    std::vector<node_t> order = all_nodes(g);
    do {
      double prod = 1;
      std::vector<node_t> avoid;
      for (node_t x : order) {
        prod *= green_det(g, 1.0, x, avoid);
        avoid.push_back(x);
      }
      CHECK(prod == doctest::Approx(target).epsilon(1e-10));
    } while (std::next_permutation(order.begin(), order.end()));
  }
}

TEST_CASE("spectrum of Π is real and inside (-1, 1)") {
  Rng rng(24);
  for (int rep = 0; rep < 100; ++rep) {
    const auto g = fixtures::random_assumption_graph(2 + static_cast<node_t>(rng.below(6)) + 1, rng);
    for (const auto& ev : transition_spectrum(g)) {
      CHECK(std::abs(ev.imag()) <= 1e-9);
      CHECK(ev.real() > -1.0);
      CHECK(ev.real() < 1.0 - 1e-12);
    }
  }
}

TEST_CASE("checked_real") {
  CHECK(checked_real({2.0, 1e-12}, "x") == 2.0);
  CHECK_THROWS_AS(checked_real({2.0, 1e-3}, "x"), spectral_error);
}

TEST_CASE("report json") {
  const auto j = tlaw_crsf(fixtures::k3()).to_json();
  CHECK(j["mode"] == "CRSF");
  CHECK(j["mgf"].size() == 10);
  TLawReport r;
  CHECK(r.to_json()["parity"].is_null());
}
