#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "rootsa/problems.hpp"

namespace rootsa {

/// Parameters of the seeded random instance generator.
struct GeneratorSpec {
  Family family = Family::mdp;
  int states = 5;
  int actions = 2;      // actions (mdp, ssp) or actions of the maximizer (game)
  int actions_min = 1;  // game only
  double discount = 0.9;
  /// Successor states with positive mass per kernel row; 0 means dense.
  int branching = 0;
  /// SSP only: probability mass sent to the absorbing state from every (x, u).
  double termination = 0.2;
  NoiseModel noise{NoiseFamily::rademacher, 1.0};
  std::uint64_t seed = 1;
};

/// Seeded random instance. MDP rewards and SSP costs are uniform on [0, 1],
/// game rewards uniform on [-1, 1]. SSP instances send at least `termination`
/// mass to the absorbing state from every pair, so every policy is proper.
/// Average-cost chains mix a random kernel with a cycle and self-loops, so they
/// are irreducible and aperiodic.
Problem generate_problem(const GeneratorSpec& spec);

GeneratorSpec generator_from_json(const nlohmann::json& j);
nlohmann::json generator_to_json(const GeneratorSpec& spec);

/// Either an inline description or {"generator": {...}}. Kernel stochasticity
/// is not enforced here (see check_problem) so audits can report it.
Problem problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const Problem& problem);

Problem load_problem(const std::string& path);

}  // namespace rootsa
