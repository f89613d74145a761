#include "crsf/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace crsf {

SpectralBundle SpectralBundle::build(const ConnectionGraph& g) {
  const node_t n = g.node_count();
  SpectralBundle b;
  b.deg = Eigen::VectorXd::Zero(n);
  b.w_phi = cmatrix::Zero(n, n);
  rmatrix w = rmatrix::Zero(n, n);
  for (node_t x = 0; x < n; ++x) {
    b.deg(x) = g.degree(x);
    for (const Arc& a : g.arcs(x)) {
      w(x, a.to) = a.w;
      b.w_phi(x, a.to) = a.w * std::polar(1.0, -a.angle);
    }
  }
  b.lambda = rmatrix(b.deg.asDiagonal()) - w;
  b.delta = cmatrix(b.deg.cast<std::complex<double>>().asDiagonal()) - b.w_phi;
  const Eigen::VectorXd inv = b.deg.cwiseInverse();
  b.p = inv.asDiagonal() * w;
  b.pi = inv.cast<std::complex<double>>().asDiagonal() * b.w_phi;
  return b;
}

double checked_real(std::complex<double> z, const char* what) {
  if (!(std::abs(z.imag()) <= 1e-9 * (1.0 + std::abs(z.real())))) {
    std::ostringstream os;
    os << what << " has imaginary part " << z.imag() << " (real part " << z.real() << ")";
    throw spectral_error(os.str());
  }
  return z.real();
}

namespace {

std::vector<node_t> kept_nodes(node_t n, const std::vector<node_t>& removed) {
  std::vector<char> drop(n, 0);
  for (node_t x : removed) {
    if (x < 0 || x >= n) throw std::invalid_argument("node id out of range");
    drop[x] = 1;
  }
  std::vector<node_t> keep;
  for (node_t x = 0; x < n; ++x)
    if (!drop[x]) keep.push_back(x);
  return keep;
}

template <class M>
M restrict(const M& m, const std::vector<node_t>& keep) {
  const auto k = static_cast<Eigen::Index>(keep.size());
  M out(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) out(i, j) = m(keep[i], keep[j]);
  return out;
}

// LU with a conditioning check so singular systems are reported instead of
// producing inf/NaN downstream.
Eigen::PartialPivLU<cmatrix> checked_lu(const cmatrix& m, const char* what) {
  Eigen::PartialPivLU<cmatrix> lu(m);
  if (m.rows() > 0 && !(lu.rcond() > 1e-13))
    throw spectral_error(std::string(what) + " is singular (assumption violated?)");
  return lu;
}

// E[t^T] = t^exponent det(I − M)/det(I − tM); M is indexed by the non-root nodes.
struct LawMatrix {
  cmatrix m;
  int exponent;
};

LawMatrix law_matrix(const ConnectionGraph& g, const LawSpec& spec) {
  const node_t n = g.node_count();
  SpectralBundle b = SpectralBundle::build(g);
  switch (spec.mode) {
    case LawMode::crsf:
      return {b.pi, n};
    case LawMode::tree: {
      if (spec.root < 0 || spec.root >= n) throw std::invalid_argument("invalid root");
      auto keep = kept_nodes(n, {spec.root});
      return {restrict(cmatrix(b.p.cast<std::complex<double>>()), keep), n - 1};
    }
    case LawMode::forest:
    case LawMode::mtsf: {
      if (!(spec.q > 0)) throw std::invalid_argument("q must be positive");
      const Eigen::VectorXd inv = (b.deg.array() + spec.q).inverse().matrix();
      const rmatrix w = rmatrix(b.deg.asDiagonal()) - b.lambda;
      const cmatrix adj = spec.mode == LawMode::mtsf ? b.w_phi : cmatrix(w.cast<std::complex<double>>());
      return {inv.cast<std::complex<double>>().asDiagonal() * adj, n};
    }
  }
  throw std::logic_error("unknown mode");
}

}  // namespace

std::complex<double> principal_minor_det(const cmatrix& M, const std::vector<node_t>& removed) {
  auto keep = kept_nodes(static_cast<node_t>(M.rows()), removed);
  if (keep.empty()) return 1.0;
  return Eigen::PartialPivLU<cmatrix>(restrict(M, keep)).determinant();
}

double green_det(const ConnectionGraph& g, double t, node_t x, const std::vector<node_t>& avoid) {
  if (!(t > 0 && t <= 1)) throw std::invalid_argument("t must lie in (0,1]");
  if (std::find(avoid.begin(), avoid.end(), x) != avoid.end())
    throw std::invalid_argument("x belongs to the avoided set");
  SpectralBundle b = SpectralBundle::build(g);
  auto keep = kept_nodes(g.node_count(), avoid);
  const auto k = static_cast<Eigen::Index>(keep.size());
  cmatrix m = cmatrix::Identity(k, k) - t * restrict(b.pi, keep);
  Eigen::Index ix = std::find(keep.begin(), keep.end(), x) - keep.begin();
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(k);
  e(ix) = 1.0;
  Eigen::VectorXcd sol = checked_lu(m, "I - tΠ").solve(e);
  return checked_real(sol(ix), "green function");
}

std::string LawSpec::label() const {
  std::ostringstream os;
  switch (mode) {
    case LawMode::crsf: os << "CRSF"; break;
    case LawMode::mtsf: os << "MTSF(q=" << q << ")"; break;
    case LawMode::forest: os << "FOREST(q=" << q << ")"; break;
    case LawMode::tree: os << "TREE(root=" << root << ")"; break;
  }
  return os.str();
}

double TLawReport::sd() const { return std::sqrt(std::max(variance, 0.0)); }

nlohmann::json TLawReport::to_json() const {
  nlohmann::json grid = nlohmann::json::array();
  for (auto [t, v] : mgf) grid.push_back({t, v});
  return {{"mode", mode},
          {"mean", mean},
          {"variance", variance},
          {"parity", parity ? nlohmann::json(*parity) : nlohmann::json(nullptr)},
          {"mgf", grid}};
}

std::vector<double> default_t_grid() {
  std::vector<double> t;
  for (int i = 1; i <= 10; ++i) t.push_back(i / 10.0);
  return t;
}

namespace {

double mgf_from(const LawMatrix& lm, std::complex<double> det_one, double t) {
  const auto k = lm.m.rows();
  if (k == 0) return std::pow(t, lm.exponent);
  cmatrix a = cmatrix::Identity(k, k) - t * lm.m;
  std::complex<double> den = Eigen::PartialPivLU<cmatrix>(a).determinant();
  if (std::abs(den) == 0) throw spectral_error("I - tM is singular");
  return std::pow(t, lm.exponent) * checked_real(det_one / den, "mgf");
}

TLawReport law_from(const LawMatrix& lm, const std::string& label, const std::vector<double>& grid) {
  const auto k = lm.m.rows();
  TLawReport r;
  r.mode = label;
  const cmatrix id = cmatrix::Identity(k, k);
  std::complex<double> det_one = 1.0;
  if (k > 0) {
    auto lu = checked_lu(id - lm.m, "I - M");
    det_one = lu.determinant();
    cmatrix a = lm.m * lu.inverse();
    const double tr = checked_real(a.trace(), "Tr A");
    const double tr2 = checked_real((a * a).trace(), "Tr A^2");
    r.mean = lm.exponent + tr;
    r.variance = tr + tr2;
    auto plus = Eigen::PartialPivLU<cmatrix>(id + lm.m).determinant();
    r.parity = (lm.exponent % 2 ? -1.0 : 1.0) * checked_real(det_one / plus, "parity");
  } else {
    r.mean = lm.exponent;
    r.variance = 0;
    r.parity = lm.exponent % 2 ? -1.0 : 1.0;
  }
  for (double t : grid) r.mgf.emplace_back(t, mgf_from(lm, det_one, t));
  return r;
}

}  // namespace

TLawReport tlaw_crsf(const ConnectionGraph& g, const std::vector<double>& t_grid) {
  return tlaw(g, LawSpec::crsf(), t_grid);
}

TLawReport tlaw_tree_forest(const ConnectionGraph& g, const LawSpec& spec,
                            const std::vector<double>& t_grid) {
  if (spec.mode == LawMode::crsf) throw std::invalid_argument("use tlaw_crsf for CRSF mode");
  return tlaw(g, spec, t_grid);
}

TLawReport tlaw(const ConnectionGraph& g, const LawSpec& spec, const std::vector<double>& t_grid) {
  return law_from(law_matrix(g, spec), spec.label(), t_grid);
}

double mgf_det(const ConnectionGraph& g, const LawSpec& spec, double t) {
  LawMatrix lm = law_matrix(g, spec);
  const auto k = lm.m.rows();
  std::complex<double> det_one =
      k ? Eigen::PartialPivLU<cmatrix>(cmatrix::Identity(k, k) - lm.m).determinant()
        : std::complex<double>(1.0);
  return mgf_from(lm, det_one, t);
}

Eigen::VectorXcd transition_spectrum(const ConnectionGraph& g) {
  return Eigen::ComplexEigenSolver<cmatrix>(SpectralBundle::build(g).pi, false).eigenvalues();
}

}  // namespace crsf
