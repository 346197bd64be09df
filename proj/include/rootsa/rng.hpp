#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace rootsa {

/// Counter-based stream keyed by (seed, run, step).
///
/// The key is hashed with splitmix64 into the state of a xoshiro256**
/// generator, so any (seed, run, step) triple can be materialized on its own
/// without replaying earlier draws. Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t run, std::uint64_t step);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via the polar method.
  double normal();
  /// +1 or -1 with equal probability.
  double rademacher();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t run() const { return run_; }
  std::uint64_t step() const { return step_; }
  /// Number of 64-bit words consumed so far.
  std::uint64_t draws() const { return draws_; }

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t seed_, run_, step_;
  std::uint64_t draws_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rootsa
