#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "crsf/graph.hpp"
#include "crsf/loops.hpp"

namespace crsf {

// Successor value of a node absorbed by the auxiliary root.
inline constexpr node_t root_node = -1;

struct WalkConfig {
  std::uint64_t seed = 0;
  std::vector<node_t> ordering;  // empty = ascending ids
  std::optional<std::uint64_t> max_steps = 1'000'000'000;
  double q = 0.0;
  std::ostream* trace = nullptr;  // one line per step when set
};

struct OrientedCrsf {
  std::vector<node_t> successor;
  std::vector<OrientedCycle> cycles;
  std::uint64_t steps_taken = 0;
  std::vector<std::vector<node_t>> stages;  // nodes added at each stage, in path order

  nlohmann::json to_json() const;
};

struct RootedMtsf {
  std::vector<node_t> successor;  // root_node for roots
  std::vector<node_t> roots;
  std::vector<OrientedCycle> cycles;
  std::uint64_t steps_taken = 0;
  std::vector<std::vector<node_t>> stages;

  nlohmann::json to_json() const;
};

// Γ_i for the i-th node added to the forest, in order of addition.
struct PoppedLoops {
  std::vector<BasedLoop> loops;

  std::size_t total_length() const;
};

class max_steps_exceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

OrientedCrsf sample_crsf(const ConnectionGraph& g, const CycleWeight& a, const WalkConfig& cfg);
RootedMtsf sample_mtsf(const ConnectionGraph& g, const CycleWeight& a, const WalkConfig& cfg);
// Wilson's algorithm: spanning tree oriented towards `root`.
RootedMtsf sample_rooted_tree(const ConnectionGraph& g, node_t root, const WalkConfig& cfg);
std::pair<PoppedLoops, OrientedCrsf> sample_verbose(const ConnectionGraph& g, const CycleWeight& a,
                                                    const WalkConfig& cfg);

// Oriented cycles of a functional graph (successor map; root_node entries end paths).
std::vector<OrientedCycle> functional_cycles(const std::vector<node_t>& successor);

}  // namespace crsf
