#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rootsa/problems.hpp"
#include "rootsa/rng.hpp"
#include "rootsa/vecspace.hpp"

namespace rootsa {

/// ||h(theta) - theta|| with the population operator.
double operator_defect(const Problem& problem, const Vector& theta, const NormSpec& norm);
double estimation_error(const Vector& theta, const Vector& theta_star, const NormSpec& norm);
/// Worst-case conversion defect / (1 - gamma).
double defect_to_error_bound(double defect, double gamma);

// Noise covariance ---------------------------------------------------------------

struct CovEstimate {
  std::size_t dim = 0;
  Vector mean;
  Matrix covariance;
  long samples = 0;
  /// Largest observed sup-norm deviation of a sample from the mean; 0 if built from a matrix.
  double noise_bound = 0.0;
};

/// Empirical mean and covariance of H(theta*) - theta* over k samples.
CovEstimate noise_covariance(const Problem& problem, const Vector& theta_star, long k, RngStream& rng);
/// Wraps a known covariance (symmetrized).
CovEstimate covariance_from_matrix(const Matrix& covariance);

/// Symmetric square root of covariance + 1e-12 (trace / dim) I.
Matrix covariance_factor(const Matrix& covariance);

// Gaussian functionals -------------------------------------------------------------

struct GaussianComplexity {
  double wbar = 0.0;
  double wbar_stderr = 0.0;
  /// Largest standard deviation of <u, W> over the norm's extreme functionals.
  double nu = 0.0;
  long mc = 0;
};

GaussianComplexity gaussian_complexity(const CovEstimate& cov, const NormSpec& norm, long mc, RngStream& rng);

/// E||(I - A)^{-1} W|| with standard error, and nu of (I - A)^{-1} W.
GaussianComplexity resolvent_functional(const Matrix& a, const CovEstimate& cov, const NormSpec& norm, long mc,
                                        RngStream& rng);
/// Span-norm version for an irreducible chain: (I - P)^{-1} is taken on the
/// xi-mean-zero quotient.
GaussianComplexity quotient_resolvent_functional(const Matrix& p, const Vector& xi, const CovEstimate& cov, long mc,
                                                 RngStream& rng);

/// Exact max over the norm's extreme functionals u of sqrt(u' S u).
double maximal_deviation(const Matrix& s, const NormSpec& norm);

// Local linearization ------------------------------------------------------------------

struct LinearizationSet {
  std::vector<Policy> policies;
  std::vector<int> candidates_per_state;
};

/// Deterministic policies whose action at every state is within 2s of the best
/// (max for MDP, min for SSP) entry of Q*. Throws InvalidArgumentError when
/// the product of per-state candidate counts exceeds cap.
LinearizationSet linearization_set(const Problem& problem, const Vector& q_star, double s, std::size_t cap = 1'000'000);
LinearizationSet linearization_set_q(const TabularMDP& mdp, const Vector& q_star, double s,
                                     std::size_t cap = 1'000'000);

struct LocalComplexity {
  double g = 0.0;
  double g_stderr = 0.0;
  double nu = 0.0;
  std::size_t set_size = 0;
};

/// G(s) and nu(s) for MDP/SSP instances. Gaussian draws are fixed at
/// construction and shared across radii, so G is monotone in s exactly and
/// repeated radii with the same set reuse cached values.
class LocalComplexityModel {
 public:
  LocalComplexityModel(const Problem& problem, Vector q_star, const CovEstimate& cov, NormSpec norm, long mc,
                       RngStream& rng, std::size_t cap = 1'000'000);

  LocalComplexity at(double s);
  /// The singleton set at the greedy policy of Q*.
  LocalComplexity singleton();

 private:
  struct PolicyStats {
    std::vector<double> norms;  // ||(I - A) ^{-1} W_k|| per draw
    double nu = 0.0;
  };
  const PolicyStats& stats(const Policy& policy);
  LocalComplexity combine(const std::vector<Policy>& policies);

  Problem problem_;
  Vector q_star_;
  Matrix cov_;
  NormSpec norm_;
  Matrix draws_;  // factor * Z, one column per draw
  std::size_t cap_;
  std::map<Policy, PolicyStats> per_policy_;
  std::map<std::vector<Policy>, LocalComplexity> per_set_;
};

LocalComplexity local_complexity(const Problem& problem, const Vector& q_star, const CovEstimate& cov, double s,
                                 long mc, RngStream& rng, const NormSpec& norm = NormSpec::sup());

// Rate fixed point -------------------------------------------------------------------------

/// Stand-in for the higher-order term with sqrt(log D) for the Dudley entropy
/// integral J2 and log D for J1.
struct HigherOrderParams {
  double gamma = 0.0;
  double alpha = 0.0;
  double lipschitz = 1.0;
  double log_dim = 1.0;
  double wbar = 0.0;
  double b_star = 0.0;
  double c = 1.0;
};

double higher_order_term(long n, double delta, const HigherOrderParams& params);

struct RateSolution {
  double s_star = 0.0;
  /// (s, rhs(s) - s) at each scanned grid point, from s_hi downward.
  std::vector<std::pair<double, double>> scan;
};

/// Largest s in [s_lo, s_hi] with s = rhs(s): geometric downward scan of 256
/// points, then bisection of the first sign change to relative 1e-8. Throws
/// ConvergenceError (with the scan in the message) when no crossing exists.
RateSolution solve_rate_fixed_point(const std::function<double(double)>& rhs, double s_lo, double s_hi);

/// s -> G(2s)/sqrt(n) + nu(2s) sqrt(log(1/delta)/n) + H_n.
std::function<double(double)> rate_rhs(LocalComplexityModel& model, long n, double delta, double higher_order);

// Mixing and contraction audits ----------------------------------------------------------

struct MixingEstimate {
  std::optional<int> t_mix;
  /// Max pairwise TV at t_mix, or at the cap on failure.
  double tv = 1.0;
};

double max_pairwise_tv(const Matrix& pt);
MixingEstimate mixing_time(const Matrix& p, int cap);

struct ContractionAudit {
  double max_ratio = 0.0;
  long pairs_used = 0;
};

/// Max over random pairs of ||h^steps(a) - h^steps(b)|| / ||a - b||, pairs
/// uniform in [-1, 1]^d (span-canonicalized for the span norm).
ContractionAudit contraction_audit(const Problem& problem, const NormSpec& norm, long pairs, RngStream& rng,
                                   int steps = 1);

}  // namespace rootsa
