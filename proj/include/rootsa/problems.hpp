#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "rootsa/rng.hpp"
#include "rootsa/vecspace.hpp"

namespace rootsa {

enum class NoiseFamily { none, rademacher, uniform };

/// Zero-mean bounded noise added to each observed reward/cost.
struct NoiseModel {
  NoiseFamily family = NoiseFamily::rademacher;
  double amplitude = 0.0;

  double draw(RngStream& rng) const;
  double variance() const;
  bool silent() const { return family == NoiseFamily::none || amplitude == 0.0; }
};

std::string to_string(NoiseFamily family);
NoiseFamily noise_family_from_string(const std::string& name);

/// Discounted MDP; Q-functions are indexed by x * actions + u.
struct TabularMDP {
  int states = 0;
  int actions = 0;
  std::vector<Matrix> kernel;  // kernel[u](x, x')
  Matrix reward;               // reward(x, u)
  double discount = 0.0;
  NoiseModel noise;

  std::size_t dim() const { return static_cast<std::size_t>(states) * actions; }
  std::size_t index(int x, int u) const { return static_cast<std::size_t>(x) * actions + u; }
};

/// Stochastic shortest path. State 0 is absorbing and cost-free; Q-functions
/// cover only states 1..states-1 and are indexed by (x - 1) * actions + u.
struct SSPInstance {
  int states = 0;
  int actions = 0;
  std::vector<Matrix> kernel;  // kernel[u](x, x')
  Matrix cost;                 // cost(x, u), row 0 is zero
  NoiseModel noise;

  std::size_t dim() const { return static_cast<std::size_t>(states - 1) * actions; }
  std::size_t index(int x, int u) const { return static_cast<std::size_t>(x - 1) * actions + u; }
};

/// Two-player zero-sum discounted Markov game. The first player maximizes.
/// Q-functions are indexed by (x * actions_max + u1) * actions_min + u2.
struct MarkovGame {
  int states = 0;
  int actions_max = 0;
  int actions_min = 0;
  std::vector<Matrix> kernel;  // kernel[u1 * actions_min + u2](x, x')
  Matrix reward;               // reward(x, u1 * actions_min + u2)
  double discount = 0.0;
  NoiseModel noise;

  std::size_t dim() const { return static_cast<std::size_t>(states) * actions_max * actions_min; }
  std::size_t index(int x, int u1, int u2) const {
    return (static_cast<std::size_t>(x) * actions_max + u1) * actions_min + u2;
  }
};

/// Undiscounted Markov reward process for average-cost policy evaluation.
struct AvgCostMRP {
  int states = 0;
  Matrix kernel;
  Vector cost;
  NoiseModel noise;
  Vector stationary;  // cached by make_avgcost / loaders

  std::size_t dim() const { return static_cast<std::size_t>(states); }
};

using Problem = std::variant<TabularMDP, SSPInstance, MarkovGame, AvgCostMRP>;

enum class Family { mdp, ssp, game, avgcost };

Family family_of(const Problem& problem);
std::string to_string(Family family);
std::size_t problem_dim(const Problem& problem);
/// Discount factor for discounted families; 0 otherwise.
double discount_of(const Problem& problem);

/// Fills in AvgCostMRP::stationary.
AvgCostMRP make_avgcost(Matrix kernel, Vector cost, NoiseModel noise);

/// Structural violations (kernel rows, absorbing state, sizes). Empty when valid.
std::vector<std::string> check_problem(const Problem& problem);
/// Throws InvalidProblemError listing every violation.
void validate(const Problem& problem);

/// One draw of the generative model: a successor state and a noise value per coordinate.
struct GenerativeSample {
  std::vector<int> next_state;
  Vector noise;
};

// Population and single-sample empirical operators -------------------------

Vector bellman_optimality(const TabularMDP& mdp, const Vector& q);
Vector mdp_empirical_bellman(const TabularMDP& mdp, const Vector& q, const GenerativeSample& sample);

Vector ssp_bellman(const SSPInstance& ssp, const Vector& q);
Vector ssp_empirical_bellman(const SSPInstance& ssp, const Vector& q, const GenerativeSample& sample);

Vector game_bellman(const MarkovGame& game, const Vector& q);
Vector game_empirical_bellman(const MarkovGame& game, const Vector& q, const GenerativeSample& sample);

Vector avgcost_bellman(const AvgCostMRP& mrp, const Vector& theta);
Vector avgcost_empirical_bellman(const AvgCostMRP& mrp, const Vector& theta, const GenerativeSample& sample);

Vector population_operator(const Problem& problem, const Vector& theta);
Vector empirical_operator(const Problem& problem, const GenerativeSample& sample, const Vector& theta);

/// Minimax value of the matrix game with the state-x' payoff block of a game Q-function.
double game_state_value(const MarkovGame& game, const Vector& q, int state);

// SSP hitting-time weights ---------------------------------------------------

struct WeightVector {
  Vector weights;       // one per non-absorbing (state, action) coordinate
  double w_max = 1.0;
  double w_min = 1.0;
  double contraction = 0.0;  // certified max_i (sum_x' P max_u' w)_i / w_i

  double nominal_factor() const { return 1.0 - 1.0 / w_max; }
};

/// Worst-case expected hitting-time weights. Throws ConvergenceError when some
/// policy is improper.
WeightVector ssp_weights(const SSPInstance& ssp, double tol = 1e-10, int max_iterations = 100000);

// Policies -------------------------------------------------------------------

using Policy = std::vector<int>;

enum class Sense { maximize, minimize };

/// Per-state argmax/argmin over blocks of `actions` consecutive entries.
/// Ties go to the smallest action index.
Policy greedy_policy(const Vector& q, int actions, Sense sense);

/// Greedy policy for a problem's own optimization sense. For SSP the policy
/// covers non-absorbing states 1..S-1 (entry x-1).
Policy greedy_policy(const Problem& problem, const Vector& q);

/// P^pi acting on Q-space: (P^pi Q)(x,u) = sum_x' P_u(x'|x) Q(x', pi(x')).
Matrix policy_transition_operator(const TabularMDP& mdp, const Policy& policy);
/// SSP version on non-absorbing coordinates; transitions into state 0 drop out.
Matrix policy_transition_operator(const SSPInstance& ssp, const Policy& policy);
/// Dispatches; for games requires actions_min == 1, for AvgCostMRP returns P.
Matrix policy_transition_operator(const Problem& problem, const Policy& policy);

/// Linear part A of the local linearization at a policy: gamma P^pi for
/// discounted families, P^pi for SSP, P for average cost.
Matrix local_linear_operator(const Problem& problem, const Policy& policy);

// Exact fixed points -----------------------------------------------------------

/// The norm a problem is naturally contractive in: sup (MDP, game), SSP
/// hitting-time weighted sup, span (average cost).
NormSpec natural_norm(const Problem& problem);

/// theta* with ||h(theta*) - theta*|| <= tol in natural_norm. For AvgCostMRP
/// this is the xi-mean-zero solution of the quotient Bellman equation.
Vector fixed_point_oracle(const Problem& problem, double tol = 1e-12, long max_iterations = 1'000'000);

}  // namespace rootsa
