#include "rootsa/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "rootsa/errors.hpp"
#include "rootsa/minimax.hpp"

namespace rootsa {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kRowTol = 1e-12;

void require_dim(const Vector& v, std::size_t dim, const char* what) {
  if (static_cast<std::size_t>(v.size()) != dim) {
    std::ostringstream os;
    os << what << ": expected dimension " << dim << ", got " << v.size();
    throw DimensionError(os.str());
  }
}

void require_sample(const GenerativeSample& s, std::size_t dim, const char* what) {
  if (s.next_state.size() != dim || static_cast<std::size_t>(s.noise.size()) != dim) {
    std::ostringstream os;
    os << what << ": sample covers " << s.next_state.size() << " coordinates, problem has " << dim;
    throw DimensionError(os.str());
  }
}

void check_kernel(const Matrix& k, int states, const std::string& label, std::vector<std::string>& out) {
  if (k.rows() != states || k.cols() != states) {
    std::ostringstream os;
    os << label << ": kernel is " << k.rows() << "x" << k.cols() << ", expected " << states << "x" << states;
    out.push_back(os.str());
    return;
  }
  for (Eigen::Index x = 0; x < k.rows(); ++x) {
    const auto row = k.row(x);
    if (!row.allFinite() || (row.array() < 0.0).any()) {
      std::ostringstream os;
      os << label << ": row " << x << " has negative or non-finite entries";
      out.push_back(os.str());
    } else if (std::abs(row.sum() - 1.0) > kRowTol) {
      std::ostringstream os;
      os.precision(17);
      os << label << ": row " << x << " sums to " << row.sum();
      out.push_back(os.str());
    }
  }
}

double max_block(const Vector& q, std::size_t offset, int width) {
  return q.segment(static_cast<Eigen::Index>(offset), width).maxCoeff();
}

double min_block(const Vector& q, std::size_t offset, int width) {
  return q.segment(static_cast<Eigen::Index>(offset), width).minCoeff();
}

Matrix game_payoff(const MarkovGame& game, const Vector& q, int state) {
  Matrix payoff(game.actions_max, game.actions_min);
  for (int u1 = 0; u1 < game.actions_max; ++u1)
    for (int u2 = 0; u2 < game.actions_min; ++u2)
      payoff(u1, u2) = q[static_cast<Eigen::Index>(game.index(state, u1, u2))];
  return payoff;
}

}  // namespace

// --------------------------------------------------------------------------

double NoiseModel::draw(RngStream& rng) const {
  switch (family) {
    case NoiseFamily::none:
      return 0.0;
    case NoiseFamily::rademacher:
      return amplitude * rng.rademacher();
    case NoiseFamily::uniform:
      return amplitude * (2.0 * rng.uniform() - 1.0);
  }
  return 0.0;
}

double NoiseModel::variance() const {
  switch (family) {
    case NoiseFamily::none:
      return 0.0;
    case NoiseFamily::rademacher:
      return amplitude * amplitude;
    case NoiseFamily::uniform:
      return amplitude * amplitude / 3.0;
  }
  return 0.0;
}

std::string to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::none:
      return "none";
    case NoiseFamily::rademacher:
      return "rademacher";
    case NoiseFamily::uniform:
      return "uniform";
  }
  return "none";
}

NoiseFamily noise_family_from_string(const std::string& name) {
  if (name == "none") return NoiseFamily::none;
  if (name == "rademacher") return NoiseFamily::rademacher;
  if (name == "uniform") return NoiseFamily::uniform;
  throw InvalidArgumentError("unknown noise family '" + name + "' (expected none, rademacher, uniform)");
}

Family family_of(const Problem& problem) {
  return std::visit(overloaded{[](const TabularMDP&) { return Family::mdp; },
                               [](const SSPInstance&) { return Family::ssp; },
                               [](const MarkovGame&) { return Family::game; },
                               [](const AvgCostMRP&) { return Family::avgcost; }},
                    problem);
}

std::string to_string(Family family) {
  switch (family) {
    case Family::mdp:
      return "mdp";
    case Family::ssp:
      return "ssp";
    case Family::game:
      return "game";
    case Family::avgcost:
      return "avgcost";
  }
  return "mdp";
}

std::size_t problem_dim(const Problem& problem) {
  return std::visit([](const auto& p) { return p.dim(); }, problem);
}

double discount_of(const Problem& problem) {
  return std::visit(overloaded{[](const TabularMDP& p) { return p.discount; },
                               [](const MarkovGame& p) { return p.discount; },
                               [](const auto&) { return 0.0; }},
                    problem);
}

AvgCostMRP make_avgcost(Matrix kernel, Vector cost, NoiseModel noise) {
  AvgCostMRP mrp;
  mrp.states = static_cast<int>(kernel.rows());
  mrp.stationary = stationary_distribution(kernel);
  mrp.kernel = std::move(kernel);
  mrp.cost = std::move(cost);
  mrp.noise = noise;
  return mrp;
}

std::vector<std::string> check_problem(const Problem& problem) {
  std::vector<std::string> out;
  auto check_noise = [&](const NoiseModel& n) {
    if (!(n.amplitude >= 0.0) || !std::isfinite(n.amplitude)) out.push_back("noise amplitude must be finite and >= 0");
  };
  std::visit(
      overloaded{
          [&](const TabularMDP& p) {
            if (p.states < 1 || p.actions < 1) out.push_back("mdp: need at least one state and one action");
            if (!(p.discount >= 0.0 && p.discount < 1.0)) out.push_back("mdp: discount must lie in [0, 1)");
            if (static_cast<int>(p.kernel.size()) != p.actions) out.push_back("mdp: one kernel per action required");
            for (std::size_t u = 0; u < p.kernel.size(); ++u)
              check_kernel(p.kernel[u], p.states, "mdp action " + std::to_string(u), out);
            if (p.reward.rows() != p.states || p.reward.cols() != p.actions) out.push_back("mdp: reward must be states x actions");
            check_noise(p.noise);
          },
          [&](const SSPInstance& p) {
            if (p.states < 2 || p.actions < 1) out.push_back("ssp: need an absorbing state plus at least one other");
            if (static_cast<int>(p.kernel.size()) != p.actions) out.push_back("ssp: one kernel per action required");
            for (std::size_t u = 0; u < p.kernel.size(); ++u) {
              check_kernel(p.kernel[u], p.states, "ssp action " + std::to_string(u), out);
              const auto& k = p.kernel[u];
              if (k.rows() == p.states && k.cols() == p.states && std::abs(k(0, 0) - 1.0) > kRowTol)
                out.push_back("ssp action " + std::to_string(u) + ": state 0 must be absorbing");
            }
            if (p.cost.rows() != p.states || p.cost.cols() != p.actions) {
              out.push_back("ssp: cost must be states x actions");
            } else if (p.cost.row(0).cwiseAbs().maxCoeff() != 0.0) {
              out.push_back("ssp: absorbing state must be cost-free");
            }
            check_noise(p.noise);
          },
          [&](const MarkovGame& p) {
            if (p.states < 1 || p.actions_max < 1 || p.actions_min < 1) out.push_back("game: empty state or action set");
            if (!(p.discount >= 0.0 && p.discount < 1.0)) out.push_back("game: discount must lie in [0, 1)");
            if (static_cast<int>(p.kernel.size()) != p.actions_max * p.actions_min)
              out.push_back("game: one kernel per action pair required");
            for (std::size_t u = 0; u < p.kernel.size(); ++u)
              check_kernel(p.kernel[u], p.states, "game action pair " + std::to_string(u), out);
            if (p.reward.rows() != p.states || p.reward.cols() != p.actions_max * p.actions_min)
              out.push_back("game: reward must be states x (actions_max * actions_min)");
            check_noise(p.noise);
          },
          [&](const AvgCostMRP& p) {
            if (p.states < 1) out.push_back("avgcost: need at least one state");
            check_kernel(p.kernel, p.states, "avgcost", out);
            if (p.cost.size() != p.states) out.push_back("avgcost: cost must have one entry per state");
            if (p.stationary.size() == p.states && p.kernel.rows() == p.states && p.kernel.cols() == p.states) {
              const double res = (p.stationary.transpose() * p.kernel - p.stationary.transpose()).cwiseAbs().maxCoeff();
              if (res > 1e-10) out.push_back("avgcost: cached stationary distribution is not stationary");
            } else {
              out.push_back("avgcost: stationary distribution missing");
            }
            check_noise(p.noise);
          }},
      problem);
  return out;
}

void validate(const Problem& problem) {
  const auto violations = check_problem(problem);
  if (violations.empty()) return;
  std::ostringstream os;
  os << "invalid " << to_string(family_of(problem)) << " instance:";
  for (const auto& v : violations) os << "\n  - " << v;
  throw InvalidProblemError(os.str());
}

// --------------------------------------------------------------------------

Vector bellman_optimality(const TabularMDP& mdp, const Vector& q) {
  require_dim(q, mdp.dim(), "bellman_optimality");
  Vector best(mdp.states);
  for (int x = 0; x < mdp.states; ++x) best[x] = max_block(q, mdp.index(x, 0), mdp.actions);
  Vector out(q.size());
  for (int x = 0; x < mdp.states; ++x)
    for (int u = 0; u < mdp.actions; ++u)
      out[static_cast<Eigen::Index>(mdp.index(x, u))] =
          mdp.reward(x, u) + mdp.discount * mdp.kernel[static_cast<std::size_t>(u)].row(x).dot(best);
  return out;
}

Vector mdp_empirical_bellman(const TabularMDP& mdp, const Vector& q, const GenerativeSample& sample) {
  require_dim(q, mdp.dim(), "mdp_empirical_bellman");
  require_sample(sample, mdp.dim(), "mdp_empirical_bellman");
  Vector out(q.size());
  for (int x = 0; x < mdp.states; ++x)
    for (int u = 0; u < mdp.actions; ++u) {
      const auto i = mdp.index(x, u);
      const int next = sample.next_state[i];
      out[static_cast<Eigen::Index>(i)] = mdp.reward(x, u) + sample.noise[static_cast<Eigen::Index>(i)] +
                                           mdp.discount * max_block(q, mdp.index(next, 0), mdp.actions);
    }
  return out;
}

Vector ssp_bellman(const SSPInstance& ssp, const Vector& q) {
  require_dim(q, ssp.dim(), "ssp_bellman");
  Vector best = Vector::Zero(ssp.states);  // absorbing state contributes nothing
  for (int x = 1; x < ssp.states; ++x) best[x] = min_block(q, ssp.index(x, 0), ssp.actions);
  Vector out(q.size());
  for (int x = 1; x < ssp.states; ++x)
    for (int u = 0; u < ssp.actions; ++u)
      out[static_cast<Eigen::Index>(ssp.index(x, u))] =
          ssp.cost(x, u) + ssp.kernel[static_cast<std::size_t>(u)].row(x).dot(best);
  return out;
}

Vector ssp_empirical_bellman(const SSPInstance& ssp, const Vector& q, const GenerativeSample& sample) {
  require_dim(q, ssp.dim(), "ssp_empirical_bellman");
  require_sample(sample, ssp.dim(), "ssp_empirical_bellman");
  Vector out(q.size());
  for (int x = 1; x < ssp.states; ++x)
    for (int u = 0; u < ssp.actions; ++u) {
      const auto i = ssp.index(x, u);
      const int next = sample.next_state[i];
      const double tail = next == 0 ? 0.0 : min_block(q, ssp.index(next, 0), ssp.actions);
      out[static_cast<Eigen::Index>(i)] = ssp.cost(x, u) + sample.noise[static_cast<Eigen::Index>(i)] + tail;
    }
  return out;
}

double game_state_value(const MarkovGame& game, const Vector& q, int state) {
  const auto offset = game.index(state, 0, 0);
  const int width = game.actions_max * game.actions_min;
  if (game.actions_min == 1) return max_block(q, offset, width);
  if (game.actions_max == 1) return min_block(q, offset, width);
  return matrix_game_solve(game_payoff(game, q, state)).value;
}

Vector game_bellman(const MarkovGame& game, const Vector& q) {
  require_dim(q, game.dim(), "game_bellman");
  Vector values(game.states);
  for (int x = 0; x < game.states; ++x) values[x] = game_state_value(game, q, x);
  Vector out(q.size());
  const int pairs = game.actions_max * game.actions_min;
  for (int x = 0; x < game.states; ++x)
    for (int a = 0; a < pairs; ++a)
      out[static_cast<Eigen::Index>(game.index(x, 0, 0)) + a] =
          game.reward(x, a) + game.discount * game.kernel[static_cast<std::size_t>(a)].row(x).dot(values);
  return out;
}

Vector game_empirical_bellman(const MarkovGame& game, const Vector& q, const GenerativeSample& sample) {
  require_dim(q, game.dim(), "game_empirical_bellman");
  require_sample(sample, game.dim(), "game_empirical_bellman");
  std::vector<std::optional<double>> values(static_cast<std::size_t>(game.states));
  Vector out(q.size());
  const int pairs = game.actions_max * game.actions_min;
  for (int x = 0; x < game.states; ++x)
    for (int a = 0; a < pairs; ++a) {
      const auto i = game.index(x, 0, 0) + static_cast<std::size_t>(a);
      const auto next = static_cast<std::size_t>(sample.next_state[i]);
      if (!values[next]) values[next] = game_state_value(game, q, static_cast<int>(next));
      out[static_cast<Eigen::Index>(i)] =
          game.reward(x, a) + sample.noise[static_cast<Eigen::Index>(i)] + game.discount * *values[next];
    }
  return out;
}

Vector avgcost_bellman(const AvgCostMRP& mrp, const Vector& theta) {
  require_dim(theta, mrp.dim(), "avgcost_bellman");
  return mrp.kernel * theta + mrp.cost;
}

Vector avgcost_empirical_bellman(const AvgCostMRP& mrp, const Vector& theta, const GenerativeSample& sample) {
  require_dim(theta, mrp.dim(), "avgcost_empirical_bellman");
  require_sample(sample, mrp.dim(), "avgcost_empirical_bellman");
  Vector out(theta.size());
  for (int x = 0; x < mrp.states; ++x)
    out[x] = theta[sample.next_state[static_cast<std::size_t>(x)]] + mrp.cost[x] + sample.noise[x];
  return out;
}

Vector population_operator(const Problem& problem, const Vector& theta) {
  return std::visit(overloaded{[&](const TabularMDP& p) { return bellman_optimality(p, theta); },
                               [&](const SSPInstance& p) { return ssp_bellman(p, theta); },
                               [&](const MarkovGame& p) { return game_bellman(p, theta); },
                               [&](const AvgCostMRP& p) { return avgcost_bellman(p, theta); }},
                    problem);
}

Vector empirical_operator(const Problem& problem, const GenerativeSample& sample, const Vector& theta) {
  return std::visit(overloaded{[&](const TabularMDP& p) { return mdp_empirical_bellman(p, theta, sample); },
                               [&](const SSPInstance& p) { return ssp_empirical_bellman(p, theta, sample); },
                               [&](const MarkovGame& p) { return game_empirical_bellman(p, theta, sample); },
                               [&](const AvgCostMRP& p) { return avgcost_empirical_bellman(p, theta, sample); }},
                    problem);
}

// --------------------------------------------------------------------------

WeightVector ssp_weights(const SSPInstance& ssp, double tol, int max_iterations) {
  validate(ssp);
  const auto dim = static_cast<Eigen::Index>(ssp.dim());
  auto apply = [&](const Vector& w) {
    Vector best = Vector::Zero(ssp.states);
    for (int x = 1; x < ssp.states; ++x) best[x] = max_block(w, ssp.index(x, 0), ssp.actions);
    Vector tail(dim);
    for (int x = 1; x < ssp.states; ++x)
      for (int u = 0; u < ssp.actions; ++u)
        tail[static_cast<Eigen::Index>(ssp.index(x, u))] = ssp.kernel[static_cast<std::size_t>(u)].row(x).dot(best);
    return tail;
  };

  Vector w = Vector::Ones(dim);
  bool converged = false;
  for (int k = 0; k < max_iterations; ++k) {
    Vector next = Vector::Ones(dim) + apply(w);
    const double change = (next - w).cwiseAbs().maxCoeff();
    w = std::move(next);
    if (!w.allFinite() || w.maxCoeff() > 1e12) break;
    if (change <= tol * std::max(1.0, w.maxCoeff())) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ConvergenceError(
        "ssp_weights: hitting-time iteration did not converge; some policy is improper "
        "(never reaches the absorbing state)");
  }
  WeightVector out;
  out.weights = w;
  out.w_max = w.maxCoeff();
  out.w_min = w.minCoeff();
  out.contraction = apply(w).cwiseQuotient(w).maxCoeff();
  return out;
}

// --------------------------------------------------------------------------

Policy greedy_policy(const Vector& q, int actions, Sense sense) {
  if (actions < 1 || q.size() % actions != 0) throw DimensionError("greedy_policy: Q size not a multiple of actions");
  const auto states = q.size() / actions;
  Policy pi(static_cast<std::size_t>(states));
  for (Eigen::Index x = 0; x < states; ++x) {
    int best = 0;
    for (int u = 1; u < actions; ++u) {
      const double cand = q[x * actions + u];
      const double cur = q[x * actions + best];
      if (sense == Sense::maximize ? cand > cur : cand < cur) best = u;
    }
    pi[static_cast<std::size_t>(x)] = best;
  }
  return pi;
}

Policy greedy_policy(const Problem& problem, const Vector& q) {
  return std::visit(
      overloaded{[&](const TabularMDP& p) { return greedy_policy(q, p.actions, Sense::maximize); },
                 [&](const SSPInstance& p) { return greedy_policy(q, p.actions, Sense::minimize); },
                 [&](const MarkovGame& p) {
                   if (p.actions_min != 1) {
                     throw InvalidArgumentError("greedy_policy: deterministic greedy policies need actions_min == 1");
                   }
                   return greedy_policy(q, p.actions_max, Sense::maximize);
                 },
                 [&](const AvgCostMRP&) -> Policy {
                   throw InvalidArgumentError("greedy_policy: average-cost evaluation has no actions");
                 }},
      problem);
}

namespace {

void require_policy(const Policy& pi, std::size_t states, int actions) {
  if (pi.size() != states) throw InvalidArgumentError("policy has wrong number of states");
  for (int a : pi)
    if (a < 0 || a >= actions) throw InvalidArgumentError("policy action index out of range");
}

TabularMDP as_mdp(const MarkovGame& game) {
  TabularMDP mdp;
  mdp.states = game.states;
  mdp.actions = game.actions_max;
  mdp.kernel = game.kernel;
  mdp.reward = game.reward;
  mdp.discount = game.discount;
  mdp.noise = game.noise;
  return mdp;
}

}  // namespace

Matrix policy_transition_operator(const TabularMDP& mdp, const Policy& policy) {
  require_policy(policy, static_cast<std::size_t>(mdp.states), mdp.actions);
  const auto dim = static_cast<Eigen::Index>(mdp.dim());
  Matrix out = Matrix::Zero(dim, dim);
  for (int x = 0; x < mdp.states; ++x)
    for (int u = 0; u < mdp.actions; ++u) {
      const auto row = static_cast<Eigen::Index>(mdp.index(x, u));
      const auto& k = mdp.kernel[static_cast<std::size_t>(u)];
      for (int y = 0; y < mdp.states; ++y)
        out(row, static_cast<Eigen::Index>(mdp.index(y, policy[static_cast<std::size_t>(y)]))) += k(x, y);
    }
  return out;
}

Matrix policy_transition_operator(const SSPInstance& ssp, const Policy& policy) {
  require_policy(policy, static_cast<std::size_t>(ssp.states - 1), ssp.actions);
  const auto dim = static_cast<Eigen::Index>(ssp.dim());
  Matrix out = Matrix::Zero(dim, dim);
  for (int x = 1; x < ssp.states; ++x)
    for (int u = 0; u < ssp.actions; ++u) {
      const auto row = static_cast<Eigen::Index>(ssp.index(x, u));
      const auto& k = ssp.kernel[static_cast<std::size_t>(u)];
      for (int y = 1; y < ssp.states; ++y)
        out(row, static_cast<Eigen::Index>(ssp.index(y, policy[static_cast<std::size_t>(y - 1)]))) += k(x, y);
    }
  return out;
}

Matrix policy_transition_operator(const Problem& problem, const Policy& policy) {
  return std::visit(overloaded{[&](const TabularMDP& p) { return policy_transition_operator(p, policy); },
                               [&](const SSPInstance& p) { return policy_transition_operator(p, policy); },
                               [&](const MarkovGame& p) {
                                 if (p.actions_min != 1) {
                                   throw InvalidArgumentError(
                                       "policy_transition_operator: games need actions_min == 1");
                                 }
                                 return policy_transition_operator(as_mdp(p), policy);
                               },
                               [&](const AvgCostMRP& p) { return Matrix(p.kernel); }},
                    problem);
}

Matrix local_linear_operator(const Problem& problem, const Policy& policy) {
  Matrix p = policy_transition_operator(problem, policy);
  const double gamma = discount_of(problem);
  if (family_of(problem) == Family::mdp || family_of(problem) == Family::game) p *= gamma;
  return p;
}

// --------------------------------------------------------------------------

NormSpec natural_norm(const Problem& problem) {
  switch (family_of(problem)) {
    case Family::ssp:
      return NormSpec::weighted_sup(ssp_weights(std::get<SSPInstance>(problem)).weights);
    case Family::avgcost:
      return NormSpec::span();
    default:
      return NormSpec::sup();
  }
}

namespace {

// Exact evaluation of the greedy policy of q; improves on value iteration's last digits.
std::optional<Vector> policy_polish(const Problem& problem, const Vector& q) {
  const auto fam = family_of(problem);
  if (fam == Family::avgcost) return std::nullopt;
  if (fam == Family::game && std::get<MarkovGame>(problem).actions_min != 1) return std::nullopt;
  const Policy pi = greedy_policy(problem, q);
  const Matrix a = local_linear_operator(problem, pi);
  const Vector offset = population_operator(problem, q) - a * q;  // reward/cost part at the greedy policy
  try {
    return resolvent_apply(a, offset, 1e-13);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

Vector fixed_point_oracle(const Problem& problem, double tol, long max_iterations) {
  validate(problem);
  if (family_of(problem) == Family::avgcost) {
    const auto& mrp = std::get<AvgCostMRP>(problem);
    return quotient_solve(mrp.kernel, mrp.stationary, mrp.cost).solution;
  }
  const auto dim = static_cast<Eigen::Index>(problem_dim(problem));
  Vector q = Vector::Zero(dim);
  double defect = std::numeric_limits<double>::infinity();
  for (long k = 0; k < max_iterations; ++k) {
    Vector next = population_operator(problem, q);
    defect = (next - q).cwiseAbs().maxCoeff();
    q = std::move(next);
    if (defect <= tol || defect <= 1e-14 * std::max(1.0, q.cwiseAbs().maxCoeff())) break;
  }
  if (auto polished = policy_polish(problem, q)) {
    const double polished_defect = (population_operator(problem, *polished) - *polished).cwiseAbs().maxCoeff();
    const double current = (population_operator(problem, q) - q).cwiseAbs().maxCoeff();
    if (polished_defect < current) q = std::move(*polished);
  }
  const double final_defect = (population_operator(problem, q) - q).cwiseAbs().maxCoeff();
  if (!(final_defect <= std::max(tol, 1e-13 * std::max(1.0, q.cwiseAbs().maxCoeff())))) {
    std::ostringstream os;
    os << "fixed_point_oracle: reached " << max_iterations << " iterations with defect " << final_defect;
    throw ConvergenceError(os.str());
  }
  return q;
}

}  // namespace rootsa
