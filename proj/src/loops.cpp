#include "crsf/loops.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace crsf {

std::size_t BasedLoop::returns() const {
  return static_cast<std::size_t>(std::count(nodes.begin() + 1, nodes.end(), base()));
}

BasedLoop BasedLoop::concat(const BasedLoop& other) const {
  if (other.base() != base()) throw std::invalid_argument("loops have different bases");
  BasedLoop out = *this;
  out.nodes.insert(out.nodes.end(), other.nodes.begin() + 1, other.nodes.end());
  return out;
}

BasedLoop BasedLoop::power(std::size_t m) const {
  BasedLoop out = trivial(base());
  for (std::size_t i = 0; i < m; ++i) out = out.concat(*this);
  return out;
}

std::size_t UnbasedLoop::representatives_at(node_t x) const {
  const auto d = static_cast<std::size_t>(std::count(canonical.begin(), canonical.end(), x));
  return representatives * d / length;
}

std::vector<OrientedCycle> erase_cycles(const BasedLoop& loop) {
  if (loop.nodes.empty() || loop.nodes.front() != loop.nodes.back())
    throw std::invalid_argument("loop is not closed");
  std::vector<OrientedCycle> cycles;
  std::vector<node_t> path{loop.base()};
  std::map<node_t, std::size_t> pos{{loop.base(), 0}};
  for (std::size_t i = 1; i < loop.nodes.size(); ++i) {
    node_t y = loop.nodes[i];
    if (auto it = pos.find(y); it != pos.end()) {
      const std::size_t p = it->second;
      cycles.emplace_back(std::span<const node_t>(path).subspan(p));
      for (std::size_t j = p + 1; j < path.size(); ++j) pos.erase(path[j]);
      path.resize(p + 1);
    } else {
      pos[y] = path.size();
      path.push_back(y);
    }
  }
  return cycles;
}

double LoopMeasureCtx::transition_product(const BasedLoop& loop) const {
  double q = 1;
  for (std::size_t i = 0; i + 1 < loop.nodes.size(); ++i)
    q *= g_.transition(loop.nodes[i], loop.nodes[i + 1]);
  return q;
}

double LoopMeasureCtx::measure(const BasedLoop& loop) const {
  if (loop.is_trivial()) return 1.0;
  double mu = transition_product(loop);
  for (const OrientedCycle& c : erase_cycles(loop)) mu *= 1.0 - a_.of(g_, c);
  return mu;
}

double LoopMeasureCtx::unbased_measure(const BasedLoop& loop) const {
  return measure(loop) / static_cast<double>(unbased_stats(loop).multiplicity);
}

double loop_measure(const LoopMeasureCtx& ctx, const BasedLoop& loop) { return ctx.measure(loop); }

UnbasedLoop unbased_stats(const BasedLoop& loop) {
  if (loop.is_trivial()) throw std::invalid_argument("trivial loop has no class");
  std::span<const node_t> body(loop.nodes.data(), loop.length());
  UnbasedLoop u;
  u.canonical = least_rotation(body);
  u.length = body.size();
  // smallest period dividing the length
  std::size_t period = u.length;
  for (std::size_t p = 1; p < u.length; ++p) {
    if (u.length % p) continue;
    bool ok = true;
    for (std::size_t i = p; i < u.length && ok; ++i) ok = body[i] == body[i - p];
    if (ok) {
      period = p;
      break;
    }
  }
  u.multiplicity = u.length / period;
  u.representatives = period;
  return u;
}

std::vector<BasedLoop> first_return_excursions(const BasedLoop& loop) {
  std::vector<BasedLoop> out;
  BasedLoop cur = BasedLoop::trivial(loop.base());
  for (std::size_t i = 1; i < loop.nodes.size(); ++i) {
    cur.nodes.push_back(loop.nodes[i]);
    if (loop.nodes[i] == loop.base()) {
      out.push_back(std::move(cur));
      cur = BasedLoop::trivial(loop.base());
    }
  }
  return out;
}

std::vector<std::size_t> draw_block_sizes(std::size_t n, Rng& rng) {
  // Chinese restaurant: customer i+1 opens a table w.p. 1/(i+1), otherwise
  // joins an existing table with probability proportional to its size,
  // i.e. sits next to a uniformly chosen earlier customer.
  std::vector<std::size_t> table_of;
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t r = rng.below(i + 1);
    if (r == i) {
      table_of.push_back(sizes.size());
      sizes.push_back(1);
    } else {
      table_of.push_back(table_of[r]);
      ++sizes[table_of[r]];
    }
  }
  std::shuffle(sizes.begin(), sizes.end(), rng);
  return sizes;
}

double composition_probability(std::span<const std::size_t> blocks) {
  double p = 1;
  for (std::size_t k = 1; k <= blocks.size(); ++k) p /= static_cast<double>(k);
  for (std::size_t m : blocks) p /= static_cast<double>(m);
  return p;
}

std::vector<BasedLoop> random_split_based(const BasedLoop& loop, Rng& rng) {
  auto exc = first_return_excursions(loop);
  std::vector<BasedLoop> out;
  std::size_t next = 0;
  for (std::size_t m : draw_block_sizes(exc.size(), rng)) {
    BasedLoop piece = BasedLoop::trivial(loop.base());
    for (std::size_t j = 0; j < m; ++j) piece = piece.concat(exc[next++]);
    out.push_back(std::move(piece));
  }
  return out;
}

std::vector<UnbasedLoop> random_split(const BasedLoop& loop, Rng& rng) {
  std::vector<UnbasedLoop> out;
  for (const BasedLoop& piece : random_split_based(loop, rng)) out.push_back(unbased_stats(piece));
  std::sort(out.begin(), out.end());
  return out;
}

void accumulate(SplitCounts& counts, const std::vector<UnbasedLoop>& loops) {
  for (const UnbasedLoop& u : loops) ++counts[u.canonical];
}

void write_split_csv(std::ostream& out, const SplitCounts& counts) {
  out << "class,length,count\n";
  for (const auto& [key, count] : counts) {
    for (std::size_t i = 0; i < key.size(); ++i) out << (i ? "-" : "") << key[i];
    out << ',' << key.size() << ',' << count << '\n';
  }
}

}  // namespace crsf
