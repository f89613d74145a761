#pragma once

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "crsf/graph.hpp"

namespace crsf {

using cmatrix = Eigen::MatrixXcd;
using rmatrix = Eigen::MatrixXd;

struct SpectralBundle {
  Eigen::VectorXd deg;
  cmatrix w_phi;   // W ⊙ Φ
  cmatrix delta;   // D − W ⊙ Φ
  rmatrix lambda;  // D − W
  rmatrix p;       // D⁻¹ W
  cmatrix pi;      // D⁻¹ (W ⊙ Φ)

  static SpectralBundle build(const ConnectionGraph& g);
};

class spectral_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Drops the imaginary part of a value that must be real; throws if it is not.
double checked_real(std::complex<double> z, const char* what);

// Determinant of M with the rows/columns in `removed` deleted (det of empty = 1).
std::complex<double> principal_minor_det(const cmatrix& M, const std::vector<node_t>& removed);

// ((I − tΠ restricted to V∖avoid)⁻¹)_xx, t in (0,1].
double green_det(const ConnectionGraph& g, double t, node_t x, const std::vector<node_t>& avoid);

enum class LawMode { crsf, mtsf, tree, forest };

struct LawSpec {
  LawMode mode = LawMode::crsf;
  double q = 0.0;
  node_t root = 0;

  static LawSpec crsf() { return {}; }
  static LawSpec mtsf(double q) { return {LawMode::mtsf, q, 0}; }
  static LawSpec forest(double q) { return {LawMode::forest, q, 0}; }
  static LawSpec tree(node_t r) { return {LawMode::tree, 0.0, r}; }
  std::string label() const;
};

struct TLawReport {
  std::string mode;
  double mean = 0;
  double variance = 0;
  std::optional<double> parity;
  std::vector<std::pair<double, double>> mgf;

  double sd() const;
  nlohmann::json to_json() const;
};

std::vector<double> default_t_grid();

TLawReport tlaw_crsf(const ConnectionGraph& g, const std::vector<double>& t_grid = default_t_grid());
TLawReport tlaw_tree_forest(const ConnectionGraph& g, const LawSpec& spec,
                            const std::vector<double>& t_grid = default_t_grid());
TLawReport tlaw(const ConnectionGraph& g, const LawSpec& spec,
                const std::vector<double>& t_grid = default_t_grid());

// E[t^T] for the given determinantal mode, any real t with I − tM invertible.
double mgf_det(const ConnectionGraph& g, const LawSpec& spec, double t);

// Eigenvalues of Π.
Eigen::VectorXcd transition_spectrum(const ConnectionGraph& g);

}  // namespace crsf
