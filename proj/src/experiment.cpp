#include "crsf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "crsf/cyclepop.hpp"
#include "crsf/rng.hpp"

namespace crsf {

ConnectionGraph gen_eru(const EruSpec& spec, int max_attempts) {
  if (spec.n < 2) throw std::invalid_argument("n must be at least 2");
  if (!(spec.p > 0 && spec.p <= 1)) throw std::invalid_argument("p must lie in (0,1]");
  if (!(spec.eta > 0 && spec.eta <= 1)) throw std::invalid_argument("eta must lie in (0,1]");
  Rng rng(spec.seed);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<Edge> edges;
    for (node_t u = 0; u < spec.n; ++u)
      for (node_t v = u + 1; v < spec.n; ++v)
        if (rng.uniform() < spec.p) edges.push_back({u, v, 1.0, 0.0});
    if (edges.size() + 1 < static_cast<std::size_t>(spec.n)) continue;
    edges[rng.below(edges.size())].theta = spec.eta * std::numbers::pi / 2;
    try {
      return ConnectionGraph(spec.n, std::move(edges));
    } catch (const graph_error&) {
      // disconnected; retry
    }
  }
  throw std::runtime_error("no connected graph after " + std::to_string(max_attempts) + " attempts");
}

std::vector<std::uint64_t> replicate_times(const ConnectionGraph& g, const LawSpec& mode,
                                           std::size_t reps, std::uint64_t seed, unsigned jobs) {
  std::vector<std::uint64_t> times(reps, 0);
  std::vector<std::string> errors(reps);
  std::atomic<std::size_t> next{0};
  const CycleWeight det = CycleWeight::determinantal();
  auto worker = [&] {
    for (std::size_t r; (r = next.fetch_add(1)) < reps;) {
      WalkConfig cfg;
      cfg.seed = seed ^ r;
      try {
        if (mode.mode == LawMode::mtsf) {
          cfg.q = mode.q;
          times[r] = sample_mtsf(g, det, cfg).steps_taken;
        } else {
          times[r] = sample_crsf(g, det, cfg).steps_taken;
        }
      } catch (const std::exception& e) {
        errors[r] = e.what();
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(reps, 1))));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);
  return times;
}

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg) {
  if (cfg.mode.mode != LawMode::crsf && cfg.mode.mode != LawMode::mtsf)
    throw std::invalid_argument("experiment mode must be CRSF or MTSF");
  if (cfg.reps == 0) throw std::invalid_argument("reps must be positive");
  std::vector<ExperimentRow> rows;
  for (std::size_t i = 0; i < cfg.etas.size(); ++i) {
    ExperimentRow row;
    row.eta = cfg.etas[i];
    row.mode = cfg.mode.mode == LawMode::mtsf ? "MTSF" : "CRSF";
    row.q = cfg.mode.mode == LawMode::mtsf ? cfg.mode.q : 0.0;
    row.reps = cfg.reps;
    const auto start = std::chrono::steady_clock::now();
    try {
      // graph seed: child 2i (or 0 when frozen); replicate seeds: child 2i+1 xor r
      const std::uint64_t topo = derive_seed(cfg.seed, cfg.freeze_topology ? 0 : 2 * i);
      const ConnectionGraph g = gen_eru({cfg.n, cfg.p, row.eta, topo});
      const TLawReport law = tlaw(g, cfg.mode, {});
      row.analytic_mean = law.mean;
      row.analytic_sd = law.sd();
      const auto times = replicate_times(g, cfg.mode, cfg.reps, derive_seed(cfg.seed, 2 * i + 1), cfg.jobs);
      double sum = 0;
      for (auto t : times) sum += static_cast<double>(t);
      row.empirical_mean = sum / static_cast<double>(times.size());
      double ss = 0;
      for (auto t : times) ss += (static_cast<double>(t) - row.empirical_mean) * (static_cast<double>(t) - row.empirical_mean);
      row.degenerate = times.size() < 2;
      row.empirical_sd = row.degenerate ? 0.0 : std::sqrt(ss / static_cast<double>(times.size() - 1));
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    if (cfg.record_time)
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(row);
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  out << "eta,mode,q,reps,analytic_mean,analytic_sd,empirical_mean,empirical_sd,wall_ms\n";
  for (const auto& r : rows) {
    out << std::setprecision(10) << r.eta << ',' << r.mode << ',' << r.q << ',' << r.reps << ','
        << r.analytic_mean << ',' << r.analytic_sd << ',' << r.empirical_mean << ','
        << r.empirical_sd << ',' << std::fixed << std::setprecision(1) << r.wall_ms
        << std::defaultfloat << '\n';
  }
}

void write_svg(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  const double w = 640, h = 420, left = 70, right = 20, top = 20, bottom = 50;
  double lo = std::numeric_limits<double>::max(), hi = 0, x0 = 1, x1 = 0;
  for (const auto& r : rows) {
    if (!r.error.empty()) continue;
    lo = std::min({lo, r.analytic_mean - r.analytic_sd, r.empirical_mean - r.empirical_sd});
    hi = std::max({hi, r.analytic_mean + r.analytic_sd, r.empirical_mean + r.empirical_sd});
    x0 = std::min(x0, r.eta);
    x1 = std::max(x1, r.eta);
  }
  lo = std::max(0.0, lo);
  if (!(hi > lo)) hi = lo + 1;
  if (!(x1 > x0)) x1 = x0 + 1;
  auto px = [&](double e) { return left + (e - x0) / (x1 - x0) * (w - left - right); };
  auto py = [&](double v) { return h - bottom - (v - lo) / (hi - lo) * (h - top - bottom); };

  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\""
      << h - bottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">eta</text>\n";
  out << "<text x=\"15\" y=\"" << h / 2 << "\" transform=\"rotate(-90 15 " << h / 2
      << ")\" text-anchor=\"middle\">E[T]</text>\n";
  out << "<text x=\"" << left - 5 << "\" y=\"" << py(lo) << "\" text-anchor=\"end\">" << lo << "</text>\n";
  out << "<text x=\"" << left - 5 << "\" y=\"" << py(hi) << "\" text-anchor=\"end\">" << hi << "</text>\n";

  auto series = [&](bool analytic, const char* color, double shift) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (const auto& r : rows)
      if (r.error.empty())
        out << px(r.eta) + shift << ',' << py(analytic ? r.analytic_mean : r.empirical_mean) << ' ';
    out << "\"/>\n";
    for (const auto& r : rows) {
      if (!r.error.empty()) continue;
      const double m = analytic ? r.analytic_mean : r.empirical_mean;
      const double s = analytic ? r.analytic_sd : r.empirical_sd;
      out << "<line x1=\"" << px(r.eta) + shift << "\" y1=\"" << py(std::max(lo, m - s)) << "\" x2=\""
          << px(r.eta) + shift << "\" y2=\"" << py(m + s) << "\" stroke=\"" << color << "\"/>\n";
    }
  };
  series(true, "red", -3);
  series(false, "blue", 3);
  out << "<text x=\"" << w - right - 5 << "\" y=\"" << top + 15
      << "\" text-anchor=\"end\" fill=\"red\">analytic</text>\n";
  out << "<text x=\"" << w - right - 5 << "\" y=\"" << top + 32
      << "\" text-anchor=\"end\" fill=\"blue\">empirical</text>\n";
  out << "</svg>\n";
  out << std::defaultfloat;
}

std::vector<double> parse_range(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    std::size_t used = 0;
    double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad range: " + spec);
    parts.push_back(v);
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3 || !(parts[2] > 0) || parts[1] < parts[0])
    throw std::invalid_argument("range must be start:stop:step with step > 0");
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (long k = 0; k <= count; ++k) out.push_back(std::round((parts[0] + k * parts[2]) * 1e12) / 1e12);
  return out;
}

}  // namespace crsf
