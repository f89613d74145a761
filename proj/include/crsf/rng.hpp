#pragma once

#include <cstdint>
#include <limits>

namespace crsf {

// Counter-based generator: the i-th output is a keyed 64-bit mix of i, so a
// stream is fully determined by (seed, counter). Satisfies
// UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on [0,1) with 53 random bits.
  double uniform();
  bool bernoulli(double p);
  // Uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

// Seed of the index-th child stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace crsf
