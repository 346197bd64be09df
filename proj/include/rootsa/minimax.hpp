#pragma once

#include "rootsa/errors.hpp"
#include "rootsa/vecspace.hpp"

namespace rootsa {

/// Equilibrium of a two-player zero-sum matrix game. The row player maximizes
/// p^T A q, the column player minimizes it.
struct MinimaxSolution {
  double value = 0.0;
  Vector row_strategy;
  Vector column_strategy;
};

class SimplexError : public ConvergenceError {
 public:
  using ConvergenceError::ConvergenceError;
};

/// Solves the game with a dense tableau simplex (Bland's rule) on the
/// positively shifted payoff. Single-row or single-column payoffs are resolved
/// as pure min/max without the LP.
MinimaxSolution matrix_game_solve(const Matrix& payoff, int max_pivots = 10000);

/// Value only; same semantics as matrix_game_solve(payoff).value.
double matrix_game_value(const Matrix& payoff);

}  // namespace rootsa
