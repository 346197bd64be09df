#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rootsa/oracle.hpp"
#include "rootsa/vecspace.hpp"

namespace rootsa {

struct RootSaConfig {
  double alpha = 0.0;
  long burn_in = 0;
  long horizon = 0;
  int restarts = 0;
  double c_epoch = 2.0;
  /// Sample counts at which the trace records; empty means default_checkpoints.
  std::vector<long> checkpoints;
  // tuning constants the stepsize and burn-in were resolved with; informational
  double c_burn = 0.08;
  double c_step = 10.0;
};

/// Throws InvalidArgumentError unless n >= 2 B0, B0 >= 2, alpha in (0, 1]
/// and every checkpoint lies in [1, n].
void validate(const RootSaConfig& config);

struct RootSaState {
  long t = 0;
  Vector theta;
  Vector v;
  Vector theta_prev;
};

struct CheckpointRecord {
  long t = 0;
  double defect = 0.0;
  std::optional<double> error;
  /// ||h(theta_{t-1}) - theta_{t-1} - v_t||; recursive runs only.
  std::optional<double> z;
  double wall_ms = 0.0;
};

struct TraceOptions {
  NormSpec norm = NormSpec::sup();
  std::optional<Vector> theta_star;
};

struct RunTrace {
  std::vector<CheckpointRecord> checkpoints;
  Vector theta_final;
  long samples_used = 0;
  bool diverged = false;
  std::string message;
  /// Defect at the start of each epoch (restart runs) followed by the final defect.
  std::vector<double> epoch_start_defects;
};

/// Iterates are rejected once their sup norm exceeds this.
inline constexpr double kDivergenceBound = 1e12;

using StepsizeSchedule = std::function<double(long t)>;

StepsizeSchedule constant_stepsize(double alpha);
/// alpha_t = 1 / (1 + (1 - gamma) t).
StepsizeSchedule rescaled_linear_stepsize(double gamma);
/// alpha_t = c / t^omega.
StepsizeSchedule polynomial_stepsize(double c, double omega);

/// theta_{t} = theta_{t-1} + alpha_t (H_t(theta_{t-1}) - theta_{t-1}), t = 1..n.
RunTrace vanilla_sa_run(GenerativeOracle& oracle, const Vector& theta0, const StepsizeSchedule& stepsizes, long n,
                        const std::vector<long>& checkpoints, const TraceOptions& options = {});

/// Streams B0 samples at theta0 into the batch mean v. Samples count toward n.
RootSaState rootsa_burn_in(GenerativeOracle& oracle, const Vector& theta0, long burn_in);

/// One recursive step; draws exactly one sample and applies it at theta and theta_prev.
RootSaState rootsa_step(RootSaState state, GenerativeOracle& oracle, double alpha);

/// Burn-in followed by n - B0 steps; consumes exactly n samples.
RunTrace rootsa_run(const RootSaConfig& config, GenerativeOracle& oracle, const Vector& theta0,
                    const TraceOptions& options = {});

/// config.restarts epochs of ceil(c_epoch B0) samples, each warm-starting the
/// next, then a final epoch on the remaining budget (which must be >= 2 B0).
/// Checkpoints count samples across all epochs.
RunTrace rootsa_restart_run(const RootSaConfig& config, GenerativeOracle& oracle, const Vector& theta0,
                            const TraceOptions& options = {});

// Tuning rules -----------------------------------------------------------------

enum class StepsizeKind {
  discounted,  // MDP, SSP and games: c / (sqrt(n log D) log(n/delta))
  avgcost,     // same form with D = |X|
  generic,     // c / (L sqrt(log D) log(n/delta) sqrt(n))
  multistep,   // c / (m L^2 log D log^2(n/delta)), independent of n
};

std::string to_string(StepsizeKind kind);
StepsizeKind stepsize_kind_from_string(const std::string& name);

struct StepsizeParams {
  double c = 1.0;
  double lipschitz = 1.0;
  long m = 1;
};

/// Clamped to (0, 1].
double default_stepsize(StepsizeKind kind, long n, double delta, double dim_product, const StepsizeParams& params = {});

/// Either a contraction factor gamma in [0, 1) or an m-step contraction index.
struct BurnInRule {
  std::optional<double> gamma;
  std::optional<long> m;
  static BurnInRule contractive(double gamma) { return {gamma, std::nullopt}; }
  static BurnInRule multistep(long m) { return {std::nullopt, m}; }
};

/// ceil(c log(n/delta) / ((1-gamma)^2 alpha)) or ceil(c m log(n/delta) / alpha); at least 2.
long default_burnin(double alpha, const BurnInRule& rule, long n, double delta, double c);

/// {ceil(B0 2^k) < n} followed by n.
std::vector<long> default_checkpoints(long burn_in, long n);

/// ceil(2 log n).
int default_restarts(long n);

}  // namespace rootsa
