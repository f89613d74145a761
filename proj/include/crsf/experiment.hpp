#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "crsf/graph.hpp"
#include "crsf/spectral.hpp"

namespace crsf {

struct EruSpec {
  node_t n = 100;
  double p = 0.8;
  double eta = 1.0;
  std::uint64_t seed = 0;
};

// Erdős–Rényi graph (resampled until connected) with unit weights and a
// single uniformly chosen edge carrying angle eta·pi/2.
ConnectionGraph gen_eru(const EruSpec& spec, int max_attempts = 10'000);

struct ExperimentConfig {
  node_t n = 100;
  double p = 0.8;
  std::vector<double> etas;
  LawSpec mode = LawSpec::crsf();  // crsf or mtsf
  std::size_t reps = 1000;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  bool freeze_topology = false;
  bool record_time = true;
};

struct ExperimentRow {
  double eta = 0;
  std::string mode;
  double q = 0;
  std::size_t reps = 0;
  double analytic_mean = 0, analytic_sd = 0;
  double empirical_mean = 0, empirical_sd = 0;
  double wall_ms = 0;
  bool degenerate = false;  // reps == 1, sd reported as 0
  std::string error;
};

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg);

// Running times of `reps` replicates; replicate r uses seed ^ r.
std::vector<std::uint64_t> replicate_times(const ConnectionGraph& g, const LawSpec& mode,
                                           std::size_t reps, std::uint64_t seed, unsigned jobs);

void write_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);
void write_svg(std::ostream& out, const std::vector<ExperimentRow>& rows);

// "start:stop:step", inclusive of stop up to rounding.
std::vector<double> parse_range(const std::string& spec);

}  // namespace crsf
