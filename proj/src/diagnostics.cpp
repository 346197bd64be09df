#include "rootsa/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "rootsa/errors.hpp"
#include "rootsa/oracle.hpp"

namespace rootsa {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Vector normal_vector(Eigen::Index dim, RngStream& rng) {
  Vector z(dim);
  for (Eigen::Index i = 0; i < dim; ++i) z[i] = rng.normal();
  return z;
}

void require_cov(const CovEstimate& cov) {
  if (cov.covariance.rows() != cov.covariance.cols() ||
      static_cast<std::size_t>(cov.covariance.rows()) != cov.dim) {
    throw DimensionError("covariance estimate is not dim x dim");
  }
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_and_se(const std::vector<double>& xs) {
  MeanSe out;
  if (xs.empty()) return out;
  const double k = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / k;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (k - 1.0) / k);
  }
  return out;
}

// MC estimate of E||M z|| for z standard normal, plus nu of M M'.
GaussianComplexity transformed_complexity(const Matrix& m, const Matrix& propagated_cov, const NormSpec& norm,
                                          long mc, RngStream& rng) {
  if (mc < 2) throw InvalidArgumentError("Monte Carlo sample count must be >= 2");
  std::vector<double> norms;
  norms.reserve(static_cast<std::size_t>(mc));
  for (long k = 0; k < mc; ++k) norms.push_back(norm_eval(norm, m * normal_vector(m.cols(), rng)));
  const auto ms = mean_and_se(norms);
  return GaussianComplexity{ms.mean, ms.se, maximal_deviation(propagated_cov, norm), mc};
}

Vector apply_h(const Problem& problem, Vector theta, int steps) {
  for (int s = 0; s < steps; ++s) theta = population_operator(problem, theta);
  return theta;
}

}  // namespace

double operator_defect(const Problem& problem, const Vector& theta, const NormSpec& norm) {
  return norm_eval(norm, population_operator(problem, theta) - theta);
}

double estimation_error(const Vector& theta, const Vector& theta_star, const NormSpec& norm) {
  if (theta.size() != theta_star.size()) throw DimensionError("estimation_error: dimension mismatch");
  return norm_eval(norm, theta - theta_star);
}

double defect_to_error_bound(double defect, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgumentError("defect_to_error_bound: gamma must lie in [0, 1)");
  return defect / (1.0 - gamma);
}

CovEstimate noise_covariance(const Problem& problem, const Vector& theta_star, long k, RngStream& rng) {
  if (k < 2) throw InvalidArgumentError("noise_covariance: k must be >= 2");
  const auto dim = static_cast<Eigen::Index>(problem_dim(problem));
  if (theta_star.size() != dim) throw DimensionError("noise_covariance: theta* dimension");
  GenerativeOracle oracle(problem, OracleMode::generative, rng(), rng());
  Matrix samples(k, dim);
  for (long i = 0; i < k; ++i) samples.row(i) = (oracle.apply(oracle.next(), theta_star) - theta_star).transpose();
  CovEstimate out;
  out.dim = static_cast<std::size_t>(dim);
  out.samples = k;
  out.mean = samples.colwise().mean().transpose();
  samples.rowwise() -= out.mean.transpose();
  out.covariance = (samples.transpose() * samples) / static_cast<double>(k - 1);
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.noise_bound = samples.size() == 0 ? 0.0 : samples.cwiseAbs().maxCoeff();
  return out;
}

CovEstimate covariance_from_matrix(const Matrix& covariance) {
  if (covariance.rows() != covariance.cols()) throw DimensionError("covariance_from_matrix: not square");
  CovEstimate out;
  out.dim = static_cast<std::size_t>(covariance.rows());
  out.mean = Vector::Zero(covariance.rows());
  out.covariance = 0.5 * (covariance + covariance.transpose());
  return out;
}

Matrix covariance_factor(const Matrix& covariance) {
  const auto n = covariance.rows();
  if (n == 0) return covariance;
  const double jitter = 1e-12 * std::max(0.0, covariance.trace()) / static_cast<double>(n);
  const Matrix sym = 0.5 * (covariance + covariance.transpose()) + jitter * Matrix::Identity(n, n);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw ConvergenceError("covariance_factor: eigendecomposition failed");
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  if (eig.eigenvalues().minCoeff() < -1e-8 * scale) {
    throw InvalidArgumentError("covariance_factor: matrix is not positive semidefinite");
  }
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double maximal_deviation(const Matrix& s, const NormSpec& norm) {
  const auto n = s.rows();
  if (n == 0) return 0.0;
  const double var = std::visit(
      overloaded{[&](const SupNorm&) { return s.diagonal().maxCoeff(); },
                 [&](const WeightedSupNorm& w) {
                   return s.diagonal().cwiseQuotient(w.weights.cwiseProduct(w.weights)).maxCoeff();
                 },
                 [&](const SpanSeminorm&) {
                   double best = 0.0;
                   for (Eigen::Index i = 0; i < n; ++i)
                     for (Eigen::Index j = i + 1; j < n; ++j)
                       best = std::max(best, s(i, i) + s(j, j) - 2.0 * s(i, j));
                   return best;
                 },
                 [&](const CoordinateSetSeminorm& c) {
                   double best = 0.0;
                   for (const auto& u : c.functionals) best = std::max(best, u.dot(s * u));
                   return best;
                 }},
      norm.kind());
  return std::sqrt(std::max(0.0, var));
}

GaussianComplexity gaussian_complexity(const CovEstimate& cov, const NormSpec& norm, long mc, RngStream& rng) {
  require_cov(cov);
  return transformed_complexity(covariance_factor(cov.covariance), cov.covariance, norm, mc, rng);
}

GaussianComplexity resolvent_functional(const Matrix& a, const CovEstimate& cov, const NormSpec& norm, long mc,
                                        RngStream& rng) {
  require_cov(cov);
  if (a.rows() != a.cols() || static_cast<std::size_t>(a.rows()) != cov.dim) {
    throw DimensionError("resolvent_functional: operator and covariance differ in dimension");
  }
  const Matrix r = resolvent_matrix(a);
  return transformed_complexity(r * covariance_factor(cov.covariance), r * cov.covariance * r.transpose(), norm, mc,
                                rng);
}

GaussianComplexity quotient_resolvent_functional(const Matrix& p, const Vector& xi, const CovEstimate& cov, long mc,
                                                 RngStream& rng) {
  require_cov(cov);
  if (static_cast<std::size_t>(p.rows()) != cov.dim) throw DimensionError("quotient_resolvent_functional: dimension");
  const Matrix r = quotient_resolvent_matrix(p, xi);
  return transformed_complexity(r * covariance_factor(cov.covariance), r * cov.covariance * r.transpose(),
                                NormSpec::span(), mc, rng);
}

LinearizationSet linearization_set(const Problem& problem, const Vector& q_star, double s, std::size_t cap) {
  if (!(s >= 0.0)) throw InvalidArgumentError("linearization_set: radius must be >= 0");
  if (static_cast<std::size_t>(q_star.size()) != problem_dim(problem)) {
    throw DimensionError("linearization_set: Q* dimension");
  }
  int actions = 0;
  Sense sense = Sense::maximize;
  if (const auto* m = std::get_if<TabularMDP>(&problem)) {
    actions = m->actions;
  } else if (const auto* sp = std::get_if<SSPInstance>(&problem)) {
    actions = sp->actions;
    sense = Sense::minimize;
  } else {
    throw InvalidArgumentError("linearization_set: only MDP and SSP instances are supported");
  }
  const auto states = static_cast<std::size_t>(q_star.size() / actions);
  LinearizationSet out;
  std::vector<std::vector<int>> cand(states);
  double combos = 1.0;
  for (std::size_t x = 0; x < states; ++x) {
    const auto block = q_star.segment(static_cast<Eigen::Index>(x) * actions, actions);
    const double best = sense == Sense::maximize ? block.maxCoeff() : block.minCoeff();
    for (int u = 0; u < actions; ++u) {
      const bool keep = sense == Sense::maximize ? block[u] >= best - 2.0 * s : block[u] <= best + 2.0 * s;
      if (keep) cand[x].push_back(u);
    }
    out.candidates_per_state.push_back(static_cast<int>(cand[x].size()));
    combos *= static_cast<double>(cand[x].size());
  }
  if (combos > static_cast<double>(cap)) {
    std::ostringstream os;
    os << "linearization_set: " << combos << " policies exceed the cap " << cap << "; candidates per state:";
    for (int c : out.candidates_per_state) os << ' ' << c;
    throw InvalidArgumentError(os.str());
  }
  // odometer over per-state candidates, last state fastest
  std::vector<std::size_t> pos(states, 0);
  while (true) {
    Policy pi(states);
    for (std::size_t x = 0; x < states; ++x) pi[x] = cand[x][pos[x]];
    out.policies.push_back(std::move(pi));
    std::size_t x = states;
    while (x > 0) {
      --x;
      if (++pos[x] < cand[x].size()) break;
      pos[x] = 0;
      if (x == 0) return out;
    }
    if (states == 0) return out;
  }
}

LinearizationSet linearization_set_q(const TabularMDP& mdp, const Vector& q_star, double s, std::size_t cap) {
  return linearization_set(Problem(mdp), q_star, s, cap);
}

LocalComplexityModel::LocalComplexityModel(const Problem& problem, Vector q_star, const CovEstimate& cov, NormSpec norm,
                                           long mc, RngStream& rng, std::size_t cap)
    : problem_(problem), q_star_(std::move(q_star)), cov_(cov.covariance), norm_(std::move(norm)), cap_(cap) {
  require_cov(cov);
  if (mc < 2) throw InvalidArgumentError("LocalComplexityModel: mc must be >= 2");
  const auto n = static_cast<Eigen::Index>(cov.dim);
  Matrix z(n, mc);
  for (long k = 0; k < mc; ++k) z.col(k) = normal_vector(n, rng);
  draws_ = covariance_factor(cov_) * z;
}

const LocalComplexityModel::PolicyStats& LocalComplexityModel::stats(const Policy& policy) {
  auto it = per_policy_.find(policy);
  if (it != per_policy_.end()) return it->second;
  const Matrix r = resolvent_matrix(local_linear_operator(problem_, policy));
  const Matrix y = r * draws_;
  PolicyStats st;
  st.norms.reserve(static_cast<std::size_t>(y.cols()));
  for (Eigen::Index k = 0; k < y.cols(); ++k) st.norms.push_back(norm_eval(norm_, y.col(k)));
  st.nu = maximal_deviation(r * cov_ * r.transpose(), norm_);
  return per_policy_.emplace(policy, std::move(st)).first->second;
}

LocalComplexity LocalComplexityModel::combine(const std::vector<Policy>& policies) {
  auto it = per_set_.find(policies);
  if (it != per_set_.end()) return it->second;
  std::vector<double> best(static_cast<std::size_t>(draws_.cols()), 0.0);
  double nu = 0.0;
  for (const auto& pi : policies) {
    const auto& st = stats(pi);
    for (std::size_t k = 0; k < best.size(); ++k) best[k] = std::max(best[k], st.norms[k]);
    nu = std::max(nu, st.nu);
  }
  const auto ms = mean_and_se(best);
  LocalComplexity out{ms.mean, ms.se, nu, policies.size()};
  per_set_.emplace(policies, out);
  return out;
}

LocalComplexity LocalComplexityModel::at(double s) {
  return combine(linearization_set(problem_, q_star_, s, cap_).policies);
}

LocalComplexity LocalComplexityModel::singleton() { return combine({greedy_policy(problem_, q_star_)}); }

LocalComplexity local_complexity(const Problem& problem, const Vector& q_star, const CovEstimate& cov, double s,
                                 long mc, RngStream& rng, const NormSpec& norm) {
  LocalComplexityModel model(problem, q_star, cov, norm, mc, rng);
  return model.at(s);
}

double higher_order_term(long n, double delta, const HigherOrderParams& p) {
  if (!(p.gamma >= 0.0 && p.gamma < 1.0)) throw InvalidArgumentError("higher_order_term: gamma must lie in [0, 1)");
  if (!(p.alpha > 0.0)) throw InvalidArgumentError("higher_order_term: alpha must be positive");
  const double nn = static_cast<double>(n);
  const double log_nd = std::log(nn / delta);
  const double j2 = std::sqrt(p.log_dim);
  const double j1 = p.log_dim;
  const double first = (j2 * p.lipschitz * std::sqrt(p.alpha / nn) + 1.0 / (nn * std::sqrt(p.alpha))) * p.wbar;
  const double second = (j2 * p.lipschitz * p.alpha / std::sqrt(nn) + 1.0 / nn) * p.b_star * (j1 + log_nd);
  return p.c * log_nd / ((1.0 - p.gamma) * (1.0 - p.gamma)) * (first + second);
}

RateSolution solve_rate_fixed_point(const std::function<double(double)>& rhs, double s_lo, double s_hi) {
  if (!(s_lo > 0.0 && s_hi > s_lo)) throw InvalidArgumentError("solve_rate_fixed_point: need 0 < s_lo < s_hi");
  constexpr int kGrid = 256;
  RateSolution out;
  const double ratio = s_lo / s_hi;
  double prev_s = 0.0;
  for (int k = 0; k < kGrid; ++k) {
    const double s = k == kGrid - 1 ? s_lo : s_hi * std::pow(ratio, static_cast<double>(k) / (kGrid - 1));
    const double g = rhs(s) - s;
    out.scan.emplace_back(s, g);
    if (g >= 0.0) {
      if (k == 0) break;  // rhs already above the identity at s_hi
      double lo = s, hi = prev_s;
      // invariant: rhs(lo) >= lo, rhs(hi) < hi
      while (hi - lo > 1e-8 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (rhs(mid) - mid >= 0.0) lo = mid;
        else hi = mid;
      }
      out.s_star = 0.5 * (lo + hi);
      return out;
    }
    prev_s = s;
  }
  std::ostringstream os;
  os.precision(6);
  os << "solve_rate_fixed_point: no crossing in [" << s_lo << ", " << s_hi << "]; scan (s, rhs - s):";
  const std::size_t step = std::max<std::size_t>(1, out.scan.size() / 8);
  for (std::size_t i = 0; i < out.scan.size(); i += step) os << " (" << out.scan[i].first << ", " << out.scan[i].second << ")";
  throw ConvergenceError(os.str());
}

std::function<double(double)> rate_rhs(LocalComplexityModel& model, long n, double delta, double higher_order) {
  const double nn = static_cast<double>(n);
  const double tail = std::sqrt(std::log(1.0 / delta) / nn);
  return [&model, nn, tail, higher_order](double s) {
    const auto lc = model.at(2.0 * s);
    return lc.g / std::sqrt(nn) + lc.nu * tail + higher_order;
  };
}

double max_pairwise_tv(const Matrix& pt) {
  double best = 0.0;
  for (Eigen::Index x = 0; x < pt.rows(); ++x)
    for (Eigen::Index y = x + 1; y < pt.rows(); ++y)
      best = std::max(best, 0.5 * (pt.row(x) - pt.row(y)).cwiseAbs().sum());
  return best;
}

MixingEstimate mixing_time(const Matrix& p, int cap) {
  if (p.rows() != p.cols() || p.rows() == 0) throw DimensionError("mixing_time: P must be square and non-empty");
  MixingEstimate out;
  Matrix pt = p;
  for (int t = 1; t <= cap; ++t) {
    out.tv = max_pairwise_tv(pt);
    if (out.tv <= 0.5) {
      out.t_mix = t;
      return out;
    }
    pt = (pt * p).eval();
  }
  return out;
}

ContractionAudit contraction_audit(const Problem& problem, const NormSpec& norm, long pairs, RngStream& rng,
                                   int steps) {
  if (pairs < 1) throw InvalidArgumentError("contraction_audit: pairs must be >= 1");
  if (steps < 1) throw InvalidArgumentError("contraction_audit: steps must be >= 1");
  const auto dim = static_cast<Eigen::Index>(problem_dim(problem));
  ContractionAudit out;
  for (long i = 0; i < pairs; ++i) {
    Vector a(dim), b(dim);
    for (Eigen::Index j = 0; j < dim; ++j) a[j] = 2.0 * rng.uniform() - 1.0;
    for (Eigen::Index j = 0; j < dim; ++j) b[j] = 2.0 * rng.uniform() - 1.0;
    if (norm.is_span()) {
      a = span_canonical(a, Vector());
      b = span_canonical(b, Vector());
    }
    const double before = norm_eval(norm, a - b);
    if (before < 1e-12) continue;
    const double after = norm_eval(norm, apply_h(problem, a, steps) - apply_h(problem, b, steps));
    out.max_ratio = std::max(out.max_ratio, after / before);
    ++out.pairs_used;
  }
  return out;
}

}  // namespace rootsa
