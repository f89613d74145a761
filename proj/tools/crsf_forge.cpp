// crsf_forge: command-line front end for the crsf library.
#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "crsf/cyclepop.hpp"
#include "crsf/experiment.hpp"
#include "crsf/graph.hpp"
#include "crsf/heaps.hpp"
#include "crsf/oracle.hpp"
#include "crsf/prs.hpp"
#include "crsf/rng.hpp"
#include "crsf/spectral.hpp"

using namespace crsf;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_verify = 2;

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CliConfig {
  std::string graph_path;
  std::string alpha_mode = "det";
  std::string alpha_path;
  std::optional<std::uint64_t> seed_flag;
  std::uint64_t seed = 0;
  unsigned jobs = 0;
  std::string out_path;
  int verbosity = 0;
};

std::uint64_t resolve_seed(const CliConfig& c) {
  if (c.seed_flag) return *c.seed_flag;
  if (const char* env = std::getenv("CRSF_FORGE_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw usage_error("CRSF_FORGE_SEED is not an unsigned integer");
  }
  return 0;
}

ConnectionGraph require_graph(const CliConfig& c) {
  if (c.graph_path.empty()) throw usage_error("--graph is required for this subcommand");
  return load_graph_file(c.graph_path);
}

CycleWeight load_weight(const CliConfig& c) {
  if (c.alpha_mode == "det") {
    if (!c.alpha_path.empty()) throw usage_error("--alpha-file conflicts with --alpha det");
    return CycleWeight::determinantal();
  }
  if (c.alpha_path.empty()) throw usage_error("--alpha file needs --alpha-file");
  std::ifstream in(c.alpha_path);
  if (!in) throw usage_error("cannot open alpha file " + c.alpha_path);
  return load_alpha(in);
}

// Writes to --out when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw usage_error("cannot write " + path);
    }
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

unsigned worker_count(const CliConfig& c) {
  if (c.jobs) return c.jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs f(i) for i in [0, count) on up to `jobs` threads; results land at index i.
template <class F>
auto parallel_map(std::size_t count, unsigned jobs, F f) {
  using R = decltype(f(std::size_t{0}));
  std::vector<R> out(count);
  const std::size_t workers = std::min<std::size_t>(jobs, std::max<std::size_t>(count, 1));
  std::vector<std::future<void>> tasks;
  for (std::size_t w = 0; w < workers; ++w)
    tasks.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < count; i += workers) out[i] = f(i);
    }));
  for (auto& t : tasks) t.get();
  return out;
}

std::vector<node_t> parse_list(const std::string& text) {
  std::vector<node_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<node_t>(v));
    } catch (const std::exception&) {
      throw usage_error("bad list entry '" + item + "'");
    }
  }
  return out;
}

LawSpec law_spec(const std::string& mode, double q, node_t root) {
  if (mode == "crsf") return LawSpec::crsf();
  if (mode == "mtsf") return LawSpec::mtsf(q);
  if (mode == "forest") return LawSpec::forest(q);
  if (mode == "tree") return LawSpec::tree(root);
  throw usage_error("unknown mode " + mode);
}

json graph_summary(const CliConfig& c, const ConnectionGraph& g) {
  return {{"path", c.graph_path}, {"nodes", g.node_count()}, {"edges", g.edge_count()}};
}

// ---- sample ----

struct SampleOpts {
  std::string mode = "crsf";
  double q = 0.0;
  node_t root = 0;
  std::size_t count = 1;
  std::string ordering;
  bool loops = false;
  std::string trace_path;
};

int run_sample(const CliConfig& c, const SampleOpts& o) {
  const auto g = require_graph(c);
  const auto a = load_weight(c);
  WalkConfig base;
  if (!o.ordering.empty()) base.ordering = parse_list(o.ordering);
  base.q = o.q;
  if (o.mode == "mtsf" && !(o.q > 0)) throw usage_error("mtsf needs --q > 0");
  if (o.mode == "tree" && (o.root < 0 || o.root >= g.node_count())) throw usage_error("--root out of range");
  if (o.loops && o.mode != "crsf") throw usage_error("--loops is only available for crsf");
  if (o.mode != "crsf" && o.mode != "mtsf" && o.mode != "tree") throw usage_error("unknown mode " + o.mode);

  auto draw = [&](std::size_t i, std::ostream* trace) {
    WalkConfig cfg = base;
    cfg.seed = derive_seed(c.seed, i);
    cfg.trace = trace;
    if (o.mode == "mtsf") return sample_mtsf(g, a, cfg).to_json();
    if (o.mode == "tree") return sample_rooted_tree(g, o.root, cfg).to_json();
    if (!o.loops) return sample_crsf(g, a, cfg).to_json();
    auto [popped, f] = sample_verbose(g, a, cfg);
    json j = f.to_json();
    json loops = json::array();
    for (const auto& l : popped.loops) loops.push_back(l.nodes);
    j["popped_loops"] = loops;
    return j;
  };

  std::vector<json> samples;
  if (!o.trace_path.empty()) {
    std::ofstream tr(o.trace_path, std::ios::binary);
    if (!tr) throw usage_error("cannot write " + o.trace_path);
    for (std::size_t i = 0; i < o.count; ++i) {
      tr << "# sample " << i << '\n';
      samples.push_back(draw(i, &tr));
    }
  } else {
    samples = parallel_map(o.count, worker_count(c), [&](std::size_t i) { return draw(i, nullptr); });
  }

  json out{{"seed", c.seed}, {"graph", graph_summary(c, g)}, {"mode", o.mode}, {"samples", samples}};
  if (o.mode == "mtsf") out["q"] = o.q;
  if (o.mode == "tree") out["root"] = o.root;
  Sink sink(c.out_path);
  sink.os() << out.dump(2) << '\n';
  return exit_ok;
}

// ---- tlaw ----

struct TlawOpts {
  std::string mode = "crsf";
  double q = 0.0;
  node_t root = 0;
};

int run_tlaw(const CliConfig& c, const TlawOpts& o) {
  const auto g = require_graph(c);
  TLawReport r;
  if (c.alpha_mode == "file") {
    if (o.mode != "crsf") throw usage_error("a generic alpha only supports --mode crsf");
    r = tlaw_generic(g, load_weight(c));
  } else {
    r = tlaw(g, law_spec(o.mode, o.q, o.root));
  }
  json out = r.to_json();
  out["seed"] = c.seed;
  out["graph"] = graph_summary(c, g);
  Sink sink(c.out_path);
  sink.os() << out.dump(2) << '\n';
  return exit_ok;
}

// ---- verify ----

struct VerifyOpts {
  std::string suite = "all";
  std::size_t samples = 100000;
  double q = 0.1;
  double p_min = 0.001;
};

std::vector<double> law_of(const EnumeratedEnsemble& ens) {
  std::vector<double> p;
  for (const auto& it : ens.items) p.push_back(it.weight / ens.z);
  return p;
}

json gof_json(const GofResult& r, double p_min) {
  return {{"chi2", r.chi2}, {"dof", r.dof}, {"p_value", r.p_value}, {"ok", r.p_value > p_min}};
}

int run_verify(const CliConfig& c, const VerifyOpts& o) {
  static const std::vector<std::string> known{"normalization", "incidence", "kernel", "cross", "gof", "all"};
  if (std::find(known.begin(), known.end(), o.suite) == known.end()) throw usage_error("unknown suite " + o.suite);
  const auto g = require_graph(c);
  const auto a = load_weight(c);
  const bool det = a.mode() == CycleWeight::Mode::determinantal;
  const bool all = o.suite == "all";
  const unsigned jobs = worker_count(c);

  json suites = json::object();
  bool ok = true;
  auto record = [&](const std::string& name, auto body) {
    json r;
    try {
      r = body();
    } catch (const enumeration_limit& e) {
      r = {{"skipped", e.what()}, {"ok", true}};
    }
    ok = ok && r.value("ok", false);
    suites[name] = r;
  };

  if (all || o.suite == "normalization")
    record("normalization", [&] { return check_normalizations(g, a, o.q).to_json(); });

  if (det && (all || o.suite == "incidence"))
    record("incidence", [&] {
      json cases = json::array();
      bool good = true;
      for (const auto& cyc : enumerate_oriented_cycles(g)) {
        if (cyc.is_backtrack()) continue;
        auto r = check_incidence(g, {cyc});
        good = good && r.ok;
        json j = r.to_json();
        j["cycle"] = to_string(cyc);
        cases.push_back(j);
      }
      return json{{"cases", cases}, {"ok", good}};
    });

  if (det && (all || o.suite == "kernel"))
    record("kernel", [&] { return check_determinantal_kernel(g, 3).to_json(); });

  if (det && (all || o.suite == "cross"))
    record("cross", [&] {
      const auto b = SpectralBundle::build(g);
      const node_t n = g.node_count();
      double worst = 0;
      for (double t : default_t_grid()) {
        const double direct = checked_real((cmatrix::Identity(n, n) - t * b.pi).determinant(), "det(I - tPi)");
        worst = std::max(worst, std::abs(trivial_heap_sum(g, a, t) - direct));
        for (node_t x = 0; x < n; ++x)
          worst = std::max(worst, std::abs(green_generic(g, a, t, x) - green_det(g, t, x, {})) /
                                      std::max(1.0, std::abs(green_det(g, t, x, {}))));
      }
      const auto spectral = tlaw_crsf(g);
      const auto generic = mgf_generic(g, a, default_t_grid());
      for (std::size_t i = 0; i < generic.size(); ++i)
        worst = std::max(worst, std::abs(generic[i].second - spectral.mgf[i].second));
      return json{{"max_error", worst}, {"ok", worst <= 1e-9}};
    });

  if (all || o.suite == "gof")
    record("gof", [&] {
      const auto probs = law_of(enumerate_oriented_crsfs(g, a));
      std::vector<std::uint64_t> walk(probs.size(), 0), prs(probs.size(), 0);
      const auto codes = parallel_map(o.samples, jobs, [&](std::size_t i) {
        WalkConfig wc;
        wc.seed = derive_seed(c.seed, 2 * i);
        return successor_code(g, sample_crsf(g, a, wc).successor);
      });
      for (auto k : codes) ++walk[k];
      json j{{"samples", o.samples}, {"cyclepopping", gof_json(gof_test(walk, probs), o.p_min)}};
      bool good = j["cyclepopping"]["ok"];
      if (enumerate_oriented_cycles(g).size() <= 63) {
        const auto inst = PrsInstance::build(g, a);
        const auto pcodes = parallel_map(o.samples, jobs, [&](std::size_t i) {
          return successor_code(g, prs_run(inst, derive_seed(c.seed, 2 * i + 1)).second.successor);
        });
        for (auto k : pcodes) ++prs[k];
        j["prs"] = gof_json(gof_test(prs, probs), o.p_min);
        good = good && j["prs"]["ok"];
      }
      j["ok"] = good;
      return j;
    });

  json out{{"seed", c.seed}, {"graph", graph_summary(c, g)}, {"suite", o.suite}, {"results", suites}, {"ok", ok}};
  Sink sink(c.out_path);
  sink.os() << out.dump(2) << '\n';
  return ok ? exit_ok : exit_verify;
}

// ---- prs ----

struct PrsOpts {
  std::size_t count = 1000;
  std::string order;
  std::string trace_csv;
  bool exact = true;
};

int run_prs(const CliConfig& c, const PrsOpts& o) {
  const auto g = require_graph(c);
  const auto a = load_weight(c);
  std::vector<std::size_t> sigma;
  if (!o.order.empty())
    for (node_t k : parse_list(o.order)) sigma.push_back(static_cast<std::size_t>(k));
  PrsInstance inst;
  try {
    inst = PrsInstance::build(g, a, sigma);
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }

  const auto traces = parallel_map(o.count, worker_count(c),
                                   [&](std::size_t i) { return prs_run(inst, derive_seed(c.seed, i)).first; });
  const std::size_t m = inst.cycles.size();
  std::vector<double> per(m, 0.0);
  double sum = 0, sum2 = 0;
  for (const auto& t : traces) {
    const double x = static_cast<double>(t.total);
    sum += x;
    sum2 += x * x;
    for (std::size_t l = 0; l < m; ++l) per[l] += static_cast<double>(t.resample_counts[l]);
  }
  const double n = static_cast<double>(std::max<std::size_t>(o.count, 1));
  const double mean = sum / n;
  json constraints = json::array();
  for (std::size_t l = 0; l < m; ++l)
    constraints.push_back({{"cycle", to_string(inst.cycles[l])}, {"alpha", inst.alpha[l]}, {"mean", per[l] / n}});

  json out{{"seed", c.seed},
           {"graph", graph_summary(c, g)},
           {"runs", o.count},
           {"order", inst.order},
           {"mean_resamplings", mean},
           {"variance", o.count > 1 ? (sum2 - n * mean * mean) / (n - 1) : 0.0},
           {"constraints", constraints}};
  if (o.exact) {
    try {
      const auto ex = resample_stats_exact(inst);
      out["exact"] = {{"total", ex.total}, {"per_constraint", ex.per_constraint}, {"p_satisfied", ex.p_satisfied}};
    } catch (const std::exception& e) {
      out["exact"] = {{"skipped", e.what()}};
    }
  }
  if (!o.trace_csv.empty() && !traces.empty()) {
    std::ofstream csv(o.trace_csv, std::ios::binary);
    if (!csv) throw usage_error("cannot write " + o.trace_csv);
    traces.front().write_csv(csv, inst);
  }
  Sink sink(c.out_path);
  sink.os() << out.dump(2) << '\n';
  return exit_ok;
}

// ---- experiment eru ----

struct EruOpts {
  node_t n = 100;
  double p = 0.8;
  std::string eta = "0.5:1.0:0.1";
  std::size_t reps = 1000;
  std::string mode = "crsf";
  double q = 5e-3;
  bool freeze = false;
  bool no_timing = false;
  std::string svg_path;
};

int run_eru(const CliConfig& c, const EruOpts& o) {
  ExperimentConfig cfg;
  cfg.n = o.n;
  cfg.p = o.p;
  try {
    cfg.etas = parse_range(o.eta);
  } catch (const std::exception& e) {
    throw usage_error(std::string("bad --eta: ") + e.what());
  }
  if (o.mode == "crsf")
    cfg.mode = LawSpec::crsf();
  else if (o.mode == "mtsf")
    cfg.mode = LawSpec::mtsf(o.q);
  else
    throw usage_error("experiment mode must be crsf or mtsf");
  if (o.reps == 0) throw usage_error("--reps must be positive");
  cfg.reps = o.reps;
  cfg.seed = c.seed;
  cfg.jobs = worker_count(c);
  cfg.freeze_topology = o.freeze;
  cfg.record_time = !o.no_timing;

  const auto rows = run_experiment(cfg);
  Sink sink(c.out_path);
  write_csv(sink.os(), rows);
  if (!o.svg_path.empty()) {
    std::ofstream svg(o.svg_path, std::ios::binary);
    if (!svg) throw usage_error("cannot write " + o.svg_path);
    write_svg(svg, rows);
  }
  // the CSV columns are fixed, so the seed goes to stderr
  std::cerr << "seed " << c.seed << '\n';
  bool failed = false;
  for (const auto& r : rows)
    if (!r.error.empty()) {
      std::cerr << "eta " << r.eta << ": " << r.error << '\n';
      failed = true;
    }
  return failed ? exit_verify : exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cycle-popping samplers, running-time laws and verification oracles on connection graphs",
               "crsf_forge"};
  app.require_subcommand(1);
  app.fallthrough();

  CliConfig cfg;
  app.add_option("--graph", cfg.graph_path, "graph file (edge list, or .json)");
  app.add_option("--alpha", cfg.alpha_mode, "cycle acceptance: det (1 - cos of the holonomy angle) or file")
      ->check(CLI::IsMember({"det", "file"}));
  app.add_option("--alpha-file", cfg.alpha_path, "alpha table, one `alpha v0 v1 ...` per line")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", cfg.seed_flag, "master seed (falls back to CRSF_FORGE_SEED, then 0)");
  app.add_option("--jobs", cfg.jobs, "worker threads (default: all cores)")->check(CLI::PositiveNumber);
  app.add_option("--out", cfg.out_path, "primary output file (default: stdout)");
  app.add_flag("-v,--verbose", cfg.verbosity, "more diagnostics on stderr");

  SampleOpts so;
  auto* sample = app.add_subcommand("sample", "draw CRSFs, MTSFs or rooted trees as JSON");
  sample->add_option("--mode", so.mode)->check(CLI::IsMember({"crsf", "mtsf", "tree"}));
  sample->add_option("--q", so.q, "MTSF root weight");
  sample->add_option("--root", so.root, "tree root");
  sample->add_option("--count", so.count, "number of samples");
  sample->add_option("--ordering", so.ordering, "comma-separated start order");
  sample->add_flag("--loops", so.loops, "also report the popped loops");
  sample->add_option("--trace", so.trace_path, "write a per-step walk trace");

  TlawOpts to;
  auto* tl = app.add_subcommand("tlaw", "exact law of the running time");
  tl->add_option("--mode", to.mode)->check(CLI::IsMember({"crsf", "mtsf", "tree", "forest"}));
  tl->add_option("--q", to.q);
  tl->add_option("--root", to.root);

  VerifyOpts vo;
  auto* verify = app.add_subcommand("verify", "run the enumeration and identity suites");
  verify->add_option("--suite", vo.suite, "normalization|incidence|kernel|cross|gof|all");
  verify->add_option("--samples", vo.samples, "draws per goodness-of-fit test");
  verify->add_option("--q", vo.q, "MTSF weight for the normalization suite");
  verify->add_option("--p-min", vo.p_min, "goodness-of-fit rejection level");

  PrsOpts po;
  auto* prs = app.add_subcommand("prs", "partial rejection sampling runs and resampling statistics");
  prs->add_option("--count", po.count, "number of runs");
  prs->add_option("--order", po.order, "comma-separated constraint priority");
  prs->add_option("--trace-csv", po.trace_csv, "resampling trace of the first run");
  prs->add_flag("!--no-exact", po.exact, "skip the exact expectations");

  EruOpts eo;
  auto* experiment = app.add_subcommand("experiment", "experiment harnesses");
  experiment->require_subcommand(1);
  auto* eru = experiment->add_subcommand("eru", "running time on ER graphs with one noisy edge");
  eru->add_option("--n", eo.n)->check(CLI::Range(2, 64000));
  eru->add_option("--p", eo.p);
  eru->add_option("--eta", eo.eta, "start:stop:step");
  eru->add_option("--reps", eo.reps);
  eru->add_option("--mode", eo.mode)->check(CLI::IsMember({"crsf", "mtsf"}));
  eru->add_option("--q", eo.q);
  eru->add_flag("--freeze-topology", eo.freeze, "one graph for every eta");
  eru->add_flag("--no-timing", eo.no_timing, "write 0 in the wall_ms column");
  eru->add_option("--svg", eo.svg_path, "also draw the curves");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    cfg.seed = resolve_seed(cfg);
    if (cfg.verbosity) std::cerr << "seed " << cfg.seed << '\n';
    if (*sample) return run_sample(cfg, so);
    if (*tl) return run_tlaw(cfg, to);
    if (*verify) return run_verify(cfg, vo);
    if (*prs) return run_prs(cfg, po);
    if (*eru) return run_eru(cfg, eo);
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const graph_error& e) {
    std::cerr << "graph error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  }
  return exit_usage;
}
