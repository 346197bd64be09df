#pragma once

#include <cstdint>
#include <string>

#include "rootsa/problems.hpp"
#include "rootsa/rng.hpp"

namespace rootsa {

/// One generative-model draw: per coordinate, a successor by inverse CDF on the
/// kernel row (coordinates visited in index order) followed by its noise.
/// Throws InvalidProblemError when a kernel row is not a distribution.
GenerativeSample draw_sample(const Problem& problem, RngStream& rng);

/// H(theta) for a fixed sample. Two calls with the same sample form the coupled
/// pair of one recursive step.
Vector empirical_operator_at(const Problem& problem, const GenerativeSample& sample, const Vector& theta);

/// Mean of k independent single-sample operators at theta.
Vector empirical_mean_operator(const Problem& problem, const Vector& theta, long k, RngStream& rng);

enum class OracleMode {
  generative,  // sampled successors and noise
  exact,       // H = h; every sample is the population operator
};

std::string to_string(OracleMode mode);
OracleMode oracle_mode_from_string(const std::string& name);

/// Stream of samples for one run. Sample t is drawn from RngStream(seed, run, t),
/// so a run can be replayed from any sample index.
class GenerativeOracle {
 public:
  GenerativeOracle(Problem problem, OracleMode mode, std::uint64_t seed, std::uint64_t run);

  /// Draws the next sample and advances the counter.
  GenerativeSample next();
  Vector apply(const GenerativeSample& sample, const Vector& theta) const;
  Vector population(const Vector& theta) const;

  const Problem& problem() const { return problem_; }
  OracleMode mode() const { return mode_; }
  std::size_t dim() const { return dim_; }
  std::uint64_t samples_drawn() const { return counter_; }

 private:
  Problem problem_;
  OracleMode mode_;
  std::uint64_t seed_, run_;
  std::uint64_t counter_ = 0;
  std::size_t dim_;
  // cumulative kernel rows, one per coordinate
  std::vector<std::vector<double>> cdf_;
};

}  // namespace rootsa
