#include "crsf/cyclepop.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <string>

#include "crsf/rng.hpp"

namespace crsf {

namespace {

std::vector<node_t> resolve_ordering(const ConnectionGraph& g, const std::vector<node_t>& ord) {
  const node_t n = g.node_count();
  if (ord.empty()) {
    std::vector<node_t> id(n);
    std::iota(id.begin(), id.end(), 0);
    return id;
  }
  std::vector<char> seen(n, 0);
  if (ord.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("ordering must be a permutation of the nodes");
  for (node_t x : ord) {
    if (x < 0 || x >= n || seen[x]) throw std::invalid_argument("ordering must be a permutation of the nodes");
    seen[x] = 1;
  }
  return ord;
}

struct Outcome {
  std::vector<node_t> successor;
  std::vector<node_t> roots;
  std::vector<OrientedCycle> cycles;
  std::uint64_t steps = 0;
  std::vector<std::vector<node_t>> stages;
  std::vector<BasedLoop> popped;
};

class Walker {
 public:
  Walker(const ConnectionGraph& g, const CycleWeight& a, const WalkConfig& cfg, bool verbose)
      : g_(g), a_(a), cfg_(cfg), rng_(cfg.seed), verbose_(verbose) {
    const node_t n = g.node_count();
    in_forest_.assign(n, 0);
    pos_.assign(n, -1);
    out_.successor.assign(n, root_node);
  }

  // TREE mode: the root is in the forest from the start.
  void preset_root(node_t r) {
    in_forest_[r] = 1;
    out_.roots.push_back(r);
  }

  Outcome run() {
    for (node_t x0 : resolve_ordering(g_, cfg_.ordering))
      if (!in_forest_[x0]) stage(x0);
    return std::move(out_);
  }

 private:
  enum class Event { extend, pop, accept, join, root };

  // One call of the Markov kernel; returns root_node on absorption.
  node_t step(node_t x, double& angle) {
    ++out_.steps;
    if (cfg_.max_steps && out_.steps > *cfg_.max_steps)
      throw max_steps_exceeded(
          "max_steps exceeded after " + std::to_string(*cfg_.max_steps) +
          " steps; check that some cycle has positive acceptance probability");
    const double deg = g_.degree(x);
    const double u = rng_.uniform() * (deg + cfg_.q);
    if (u >= deg) return root_node;
    auto arcs = g_.arcs(x);
    auto it = std::upper_bound(arcs.begin(), arcs.end(), u,
                               [](double v, const Arc& a) { return v < a.cum; });
    if (it == arcs.end()) --it;
    angle = it->angle;
    return it->to;
  }

  void log(node_t x, node_t y, Event e) {
    static constexpr const char* names[] = {"extend", "pop", "accept", "join", "root"};
    *cfg_.trace << out_.steps << ' ' << x << ' ';
    if (y == root_node)
      *cfg_.trace << 'r';
    else
      *cfg_.trace << y;
    *cfg_.trace << ' ' << names[static_cast<int>(e)] << '\n';
  }

  void stage(node_t x0) {
    path_.assign(1, x0);
    angles_.clear();
    pos_[x0] = 0;
    raw_.assign(1, x0);
    node_t target;
    while (true) {
      const node_t x = path_.back();
      double angle = 0;
      const node_t y = step(x, angle);
      if (y == root_node) {
        if (cfg_.trace) log(x, y, Event::root);
        out_.roots.push_back(x);
        target = root_node;
        break;
      }
      if (in_forest_[y]) {
        if (cfg_.trace) log(x, y, Event::join);
        target = y;
        break;
      }
      if (pos_[y] >= 0) {
        const auto p = static_cast<std::size_t>(pos_[y]);
        std::span<const node_t> cyc(path_.data() + p, path_.size() - p);
        double theta = angle;
        for (std::size_t i = p; i < angles_.size(); ++i) theta += angles_[i];
        if (rng_.bernoulli(a_(cyc, theta))) {
          if (cfg_.trace) log(x, y, Event::accept);
          out_.cycles.emplace_back(cyc);
          target = y;
          break;
        }
        if (cfg_.trace) log(x, y, Event::pop);
        for (std::size_t i = p + 1; i < path_.size(); ++i) pos_[path_[i]] = -1;
        path_.resize(p + 1);
        angles_.resize(p);
        if (verbose_) raw_.push_back(y);
        continue;
      }
      if (cfg_.trace) log(x, y, Event::extend);
      pos_[y] = static_cast<std::int64_t>(path_.size());
      path_.push_back(y);
      angles_.push_back(angle);
      if (verbose_) raw_.push_back(y);
    }

    for (std::size_t i = 0; i + 1 < path_.size(); ++i) out_.successor[path_[i]] = path_[i + 1];
    out_.successor[path_.back()] = target;
    for (node_t v : path_) {
      in_forest_[v] = 1;
      pos_[v] = -1;
    }
    if (verbose_) split_raw_walk();
    out_.stages.push_back(path_);
  }

  // Last-exit decomposition of the stage's raw walk: Γ for path node x_j is
  // the walk between the last visit of x_{j-1} (exclusive) and the last visit
  // of x_j (inclusive).
  void split_raw_walk() {
    std::vector<std::size_t> last(path_.size());
    std::vector<std::int64_t> slot(g_.node_count(), -1);
    for (std::size_t j = 0; j < path_.size(); ++j) slot[path_[j]] = static_cast<std::int64_t>(j);
    for (std::size_t i = 0; i < raw_.size(); ++i)
      if (slot[raw_[i]] >= 0) last[static_cast<std::size_t>(slot[raw_[i]])] = i;
    std::size_t begin = 0;
    for (std::size_t j = 0; j < path_.size(); ++j) {
      BasedLoop loop;
      loop.nodes.assign(raw_.begin() + static_cast<std::ptrdiff_t>(begin),
                        raw_.begin() + static_cast<std::ptrdiff_t>(last[j] + 1));
      out_.popped.push_back(std::move(loop));
      begin = last[j] + 1;
    }
  }

  const ConnectionGraph& g_;
  const CycleWeight& a_;
  const WalkConfig& cfg_;
  Rng rng_;
  bool verbose_;
  std::vector<char> in_forest_;
  std::vector<std::int64_t> pos_;
  std::vector<node_t> path_;
  std::vector<double> angles_;  // angles_[i] is the angle of path_[i] -> path_[i+1]
  std::vector<node_t> raw_;
  Outcome out_;
};

nlohmann::json cycles_json(const std::vector<OrientedCycle>& cycles) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : cycles) out.push_back(c.nodes);
  return out;
}

}  // namespace

nlohmann::json OrientedCrsf::to_json() const {
  return {{"successor", successor},
          {"cycles", cycles_json(cycles)},
          {"steps", steps_taken},
          {"stages", stages}};
}

nlohmann::json RootedMtsf::to_json() const {
  return {{"successor", successor},
          {"roots", roots},
          {"cycles", cycles_json(cycles)},
          {"steps", steps_taken},
          {"stages", stages}};
}

std::size_t PoppedLoops::total_length() const {
  std::size_t s = 0;
  for (const auto& l : loops) s += l.length();
  return s;
}

OrientedCrsf sample_crsf(const ConnectionGraph& g, const CycleWeight& a, const WalkConfig& cfg) {
  WalkConfig c = cfg;
  c.q = 0;
  Outcome o = Walker(g, a, c, false).run();
  return {std::move(o.successor), std::move(o.cycles), o.steps, std::move(o.stages)};
}

RootedMtsf sample_mtsf(const ConnectionGraph& g, const CycleWeight& a, const WalkConfig& cfg) {
  if (!(cfg.q > 0)) throw std::invalid_argument("q must be positive");
  Outcome o = Walker(g, a, cfg, false).run();
  std::sort(o.roots.begin(), o.roots.end());
  return {std::move(o.successor), std::move(o.roots), std::move(o.cycles), o.steps,
          std::move(o.stages)};
}

RootedMtsf sample_rooted_tree(const ConnectionGraph& g, node_t root, const WalkConfig& cfg) {
  if (root < 0 || root >= g.node_count()) throw std::invalid_argument("invalid root");
  WalkConfig c = cfg;
  c.q = 0;
  const CycleWeight none = CycleWeight::explicit_table({});
  Walker w(g, none, c, false);
  w.preset_root(root);
  Outcome o = w.run();
  return {std::move(o.successor), std::move(o.roots), std::move(o.cycles), o.steps,
          std::move(o.stages)};
}

std::pair<PoppedLoops, OrientedCrsf> sample_verbose(const ConnectionGraph& g, const CycleWeight& a,
                                                    const WalkConfig& cfg) {
  WalkConfig c = cfg;
  c.q = 0;
  Outcome o = Walker(g, a, c, true).run();
  return {PoppedLoops{std::move(o.popped)},
          OrientedCrsf{std::move(o.successor), std::move(o.cycles), o.steps, std::move(o.stages)}};
}

std::vector<OrientedCycle> functional_cycles(const std::vector<node_t>& succ) {
  const std::size_t n = succ.size();
  std::vector<int> color(n, 0);  // 0 new, 1 on current walk, 2 done
  std::vector<OrientedCycle> cycles;
  std::vector<node_t> walk;
  for (std::size_t s = 0; s < n; ++s) {
    if (color[s]) continue;
    walk.clear();
    node_t x = static_cast<node_t>(s);
    while (x != root_node && color[x] == 0) {
      color[x] = 1;
      walk.push_back(x);
      x = succ[x];
    }
    if (x != root_node && color[x] == 1) {
      auto it = std::find(walk.begin(), walk.end(), x);
      cycles.emplace_back(std::span<const node_t>(&*it, static_cast<std::size_t>(walk.end() - it)));
    }
    for (node_t v : walk) color[v] = 2;
  }
  std::sort(cycles.begin(), cycles.end());
  return cycles;
}

}  // namespace crsf
