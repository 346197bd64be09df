#include "rootsa/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "rootsa/errors.hpp"

namespace rootsa {

namespace {

using Clock = std::chrono::steady_clock;

bool out_of_bounds(const Vector& theta) {
  return !theta.allFinite() || (theta.size() > 0 && theta.cwiseAbs().maxCoeff() > kDivergenceBound);
}

void require_checkpoints(const std::vector<long>& cps, long n) {
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (cps[i] < 1 || cps[i] > n) {
      std::ostringstream os;
      os << "checkpoint " << cps[i] << " outside [1, " << n << "]";
      throw InvalidArgumentError(os.str());
    }
    if (i > 0 && cps[i] <= cps[i - 1]) throw InvalidArgumentError("checkpoints must be strictly increasing");
  }
}

// Records checkpoints in order as the global sample count passes them.
class Recorder {
 public:
  Recorder(const std::vector<long>& checkpoints, const GenerativeOracle& oracle, const TraceOptions& options,
           RunTrace& trace)
      : cps_(checkpoints), oracle_(oracle), options_(options), trace_(trace), start_(Clock::now()) {}

  bool due(long t) const { return next_ < cps_.size() && cps_[next_] == t; }
  long pending() const { return next_ < cps_.size() ? cps_[next_] : -1; }

  void record(long t, const Vector& theta, const RootSaState* state) {
    CheckpointRecord rec;
    rec.t = t;
    rec.defect = norm_eval(options_.norm, oracle_.population(theta) - theta);
    if (options_.theta_star) rec.error = norm_eval(options_.norm, theta - *options_.theta_star);
    if (state != nullptr) {
      const Vector& prev = state->theta_prev;
      rec.z = norm_eval(options_.norm, oracle_.population(prev) - prev - state->v);
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
    trace_.checkpoints.push_back(rec);
    ++next_;
  }

 private:
  const std::vector<long>& cps_;
  const GenerativeOracle& oracle_;
  const TraceOptions& options_;
  RunTrace& trace_;
  Clock::time_point start_;
  std::size_t next_ = 0;
};

// One ROOT-SA epoch of `length` samples starting after `offset` samples.
// Returns false on divergence.
bool run_epoch(GenerativeOracle& oracle, const Vector& theta0, long burn_in, long length, double alpha, long offset,
               Recorder& rec, RunTrace& trace) {
  RootSaState state = rootsa_burn_in(oracle, theta0, burn_in);
  // theta stays at theta0 throughout burn-in
  while (rec.pending() > 0 && rec.pending() < offset + burn_in) rec.record(rec.pending(), theta0, nullptr);
  if (rec.due(offset + burn_in)) rec.record(offset + burn_in, state.theta, &state);
  for (long t = burn_in + 1; t <= length; ++t) {
    try {
      state = rootsa_step(std::move(state), oracle, alpha);
    } catch (const ConvergenceError& e) {
      trace.diverged = true;
      trace.message = e.what();
      return false;
    }
    if (rec.due(offset + t)) rec.record(offset + t, state.theta, &state);
  }
  trace.theta_final = state.theta;
  return true;
}

}  // namespace

void validate(const RootSaConfig& c) {
  std::ostringstream os;
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) os << "stepsize " << c.alpha << " outside (0, 1]; ";
  if (c.burn_in < 2) os << "burn-in " << c.burn_in << " < 2; ";
  if (c.horizon < 2 * c.burn_in) os << "horizon " << c.horizon << " < 2 * burn-in " << c.burn_in << "; ";
  if (c.restarts < 0) os << "restarts must be >= 0; ";
  if (!(c.c_epoch > 0.0)) os << "c_epoch must be positive; ";
  const auto msg = os.str();
  if (!msg.empty()) throw InvalidArgumentError("invalid ROOT-SA config: " + msg.substr(0, msg.size() - 2));
  require_checkpoints(c.checkpoints, c.horizon);
}

StepsizeSchedule constant_stepsize(double alpha) {
  return [alpha](long) { return alpha; };
}

StepsizeSchedule rescaled_linear_stepsize(double gamma) {
  return [gamma](long t) { return 1.0 / (1.0 + (1.0 - gamma) * static_cast<double>(t)); };
}

StepsizeSchedule polynomial_stepsize(double c, double omega) {
  return [c, omega](long t) { return c / std::pow(static_cast<double>(t), omega); };
}

RunTrace vanilla_sa_run(GenerativeOracle& oracle, const Vector& theta0, const StepsizeSchedule& stepsizes, long n,
                        const std::vector<long>& checkpoints, const TraceOptions& options) {
  if (n < 1) throw InvalidArgumentError("vanilla_sa_run: n must be >= 1");
  if (static_cast<std::size_t>(theta0.size()) != oracle.dim()) throw DimensionError("vanilla_sa_run: theta0 dimension");
  require_checkpoints(checkpoints, n);
  RunTrace trace;
  Recorder rec(checkpoints, oracle, options, trace);
  const auto drawn0 = oracle.samples_drawn();
  Vector theta = theta0;
  for (long t = 1; t <= n; ++t) {
    const double a = stepsizes(t);
    if (!(a > 0.0 && a <= 1.0)) {
      std::ostringstream os;
      os << "vanilla_sa_run: stepsize " << a << " at t=" << t << " outside (0, 1]";
      throw InvalidArgumentError(os.str());
    }
    const auto sample = oracle.next();
    Vector next = theta + a * (oracle.apply(sample, theta) - theta);
    if (out_of_bounds(next)) {
      trace.diverged = true;
      trace.message = "iterate left the divergence bound at t=" + std::to_string(t);
      break;
    }
    theta = std::move(next);
    if (rec.due(t)) rec.record(t, theta, nullptr);
  }
  trace.theta_final = theta;
  trace.samples_used = static_cast<long>(oracle.samples_drawn() - drawn0);
  return trace;
}

RootSaState rootsa_burn_in(GenerativeOracle& oracle, const Vector& theta0, long burn_in) {
  if (burn_in < 2) throw InvalidArgumentError("rootsa_burn_in: B0 must be >= 2");
  if (static_cast<std::size_t>(theta0.size()) != oracle.dim()) throw DimensionError("rootsa_burn_in: theta0 dimension");
  Vector acc = Vector::Zero(theta0.size());
  for (long t = 0; t < burn_in; ++t) acc += oracle.apply(oracle.next(), theta0) - theta0;
  return RootSaState{burn_in, theta0, acc / static_cast<double>(burn_in), theta0};
}

RootSaState rootsa_step(RootSaState state, GenerativeOracle& oracle, double alpha) {
  if (state.t < 1) throw InvalidArgumentError("rootsa_step: state has not been burned in");
  const long t = state.t + 1;
  const auto sample = oracle.next();
  const Vector fresh = oracle.apply(sample, state.theta) - state.theta;
  const Vector lagged = oracle.apply(sample, state.theta_prev) - state.theta_prev;
  const double w = static_cast<double>(t - 1) / static_cast<double>(t);
  state.v = fresh + w * (state.v - lagged);
  state.theta_prev = state.theta;
  state.theta += alpha * state.v;
  state.t = t;
  if (out_of_bounds(state.theta) || !state.v.allFinite()) {
    throw ConvergenceError("rootsa_step: iterate left the divergence bound at t=" + std::to_string(t));
  }
  return state;
}

RunTrace rootsa_run(const RootSaConfig& config, GenerativeOracle& oracle, const Vector& theta0,
                    const TraceOptions& options) {
  validate(config);
  RunTrace trace;
  Recorder rec(config.checkpoints, oracle, options, trace);
  const auto drawn0 = oracle.samples_drawn();
  trace.theta_final = theta0;
  trace.epoch_start_defects.push_back(norm_eval(options.norm, oracle.population(theta0) - theta0));
  if (run_epoch(oracle, theta0, config.burn_in, config.horizon, config.alpha, 0, rec, trace)) {
    trace.epoch_start_defects.push_back(
        norm_eval(options.norm, oracle.population(trace.theta_final) - trace.theta_final));
  }
  trace.samples_used = static_cast<long>(oracle.samples_drawn() - drawn0);
  return trace;
}

RunTrace rootsa_restart_run(const RootSaConfig& config, GenerativeOracle& oracle, const Vector& theta0,
                            const TraceOptions& options) {
  validate(config);
  const long epoch = static_cast<long>(std::ceil(config.c_epoch * static_cast<double>(config.burn_in) * (1.0 - 1e-12)));
  if (config.restarts > 0 && epoch < config.burn_in + 1) {
    throw InvalidArgumentError("rootsa_restart_run: epoch length must exceed the burn-in");
  }
  const long final_len = config.horizon - static_cast<long>(config.restarts) * epoch;
  if (final_len < 2 * config.burn_in) {
    std::ostringstream os;
    os << "rootsa_restart_run: budget exhausted; " << config.restarts << " epochs of " << epoch << " leave "
       << final_len << " samples, need at least " << 2 * config.burn_in;
    throw InvalidArgumentError(os.str());
  }
  RunTrace trace;
  Recorder rec(config.checkpoints, oracle, options, trace);
  const auto drawn0 = oracle.samples_drawn();
  Vector theta = theta0;
  trace.theta_final = theta0;
  long offset = 0;
  for (int e = 0; e <= config.restarts; ++e) {
    const long len = e < config.restarts ? epoch : final_len;
    trace.epoch_start_defects.push_back(norm_eval(options.norm, oracle.population(theta) - theta));
    if (!run_epoch(oracle, theta, config.burn_in, len, config.alpha, offset, rec, trace)) break;
    theta = trace.theta_final;
    offset += len;
  }
  if (!trace.diverged) trace.epoch_start_defects.push_back(norm_eval(options.norm, oracle.population(theta) - theta));
  trace.samples_used = static_cast<long>(oracle.samples_drawn() - drawn0);
  return trace;
}

std::string to_string(StepsizeKind kind) {
  switch (kind) {
    case StepsizeKind::discounted: return "discounted";
    case StepsizeKind::avgcost: return "avgcost";
    case StepsizeKind::generic: return "generic";
    case StepsizeKind::multistep: return "multistep";
  }
  return "unknown";
}

StepsizeKind stepsize_kind_from_string(const std::string& name) {
  if (name == "discounted") return StepsizeKind::discounted;
  if (name == "avgcost") return StepsizeKind::avgcost;
  if (name == "generic") return StepsizeKind::generic;
  if (name == "multistep") return StepsizeKind::multistep;
  throw InvalidArgumentError("unknown stepsize rule '" + name + "'");
}

double default_stepsize(StepsizeKind kind, long n, double delta, double dim_product, const StepsizeParams& p) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgumentError("default_stepsize: delta must lie in (0, 1)");
  if (n < 1) throw InvalidArgumentError("default_stepsize: n must be positive");
  if (!(dim_product > 1.0)) throw InvalidArgumentError("default_stepsize: dimension product must exceed 1");
  if (!(p.c > 0.0) || !(p.lipschitz > 0.0) || p.m < 1) throw InvalidArgumentError("default_stepsize: bad constants");
  const double nn = static_cast<double>(n);
  const double log_d = std::log(dim_product);
  const double log_nd = std::log(nn / delta);
  double alpha = 0.0;
  switch (kind) {
    case StepsizeKind::discounted:
    case StepsizeKind::avgcost:
      alpha = p.c / (std::sqrt(nn * log_d) * log_nd);
      break;
    case StepsizeKind::generic:
      alpha = p.c / (p.lipschitz * std::sqrt(log_d) * log_nd * std::sqrt(nn));
      break;
    case StepsizeKind::multistep:
      alpha = p.c / (static_cast<double>(p.m) * p.lipschitz * p.lipschitz * log_d * log_nd * log_nd);
      break;
  }
  return std::min(alpha, 1.0);
}

long default_burnin(double alpha, const BurnInRule& rule, long n, double delta, double c) {
  if (!(alpha > 0.0)) throw InvalidArgumentError("default_burnin: alpha must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgumentError("default_burnin: delta must lie in (0, 1)");
  if (!(c > 0.0)) throw InvalidArgumentError("default_burnin: c must be positive");
  const double log_nd = std::log(static_cast<double>(n) / delta);
  double raw = 0.0;
  if (rule.gamma) {
    const double g = *rule.gamma;
    if (!(g >= 0.0 && g < 1.0)) throw InvalidArgumentError("default_burnin: gamma must lie in [0, 1)");
    raw = c * log_nd / ((1.0 - g) * (1.0 - g) * alpha);
  } else if (rule.m) {
    if (*rule.m < 1) throw InvalidArgumentError("default_burnin: m must be >= 1");
    raw = c * static_cast<double>(*rule.m) * log_nd / alpha;
  } else {
    throw InvalidArgumentError("default_burnin: rule needs gamma or m");
  }
  // slack absorbs rounding in products that are integral on paper
  const double b = std::ceil(raw * (1.0 - 1e-12));
  if (!(b < 9e18)) throw InvalidArgumentError("default_burnin: burn-in overflows");
  return std::max(2L, static_cast<long>(b));
}

std::vector<long> default_checkpoints(long burn_in, long n) {
  std::vector<long> out;
  for (double t = static_cast<double>(std::max(1L, burn_in)); t < static_cast<double>(n); t *= 2.0) {
    const long c = static_cast<long>(std::ceil(t));
    if (out.empty() || c > out.back()) out.push_back(c);
  }
  out.push_back(n);
  return out;
}

int default_restarts(long n) {
  if (n < 1) throw InvalidArgumentError("default_restarts: n must be positive");
  return static_cast<int>(std::ceil(2.0 * std::log(static_cast<double>(n)) * (1.0 - 1e-12)));
}

}  // namespace rootsa
