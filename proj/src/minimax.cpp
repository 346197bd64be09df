#include "rootsa/minimax.hpp"

#include <cmath>
#include <sstream>

namespace rootsa {

namespace {

constexpr double kPivotEps = 1e-12;

MinimaxSolution pure_solution(const Matrix& a) {
  MinimaxSolution out;
  out.row_strategy = Vector::Zero(a.rows());
  out.column_strategy = Vector::Zero(a.cols());
  Eigen::Index i = 0, j = 0;
  if (a.cols() == 1) {
    // smallest index among ties
    out.value = a.col(0).maxCoeff(&i);
  } else {
    out.value = a.row(0).minCoeff(&j);
  }
  out.row_strategy[i] = 1.0;
  out.column_strategy[j] = 1.0;
  return out;
}

}  // namespace

MinimaxSolution matrix_game_solve(const Matrix& payoff, int max_pivots) {
  const Eigen::Index m = payoff.rows();
  const Eigen::Index n = payoff.cols();
  if (m == 0 || n == 0) throw InvalidArgumentError("matrix_game_solve: empty payoff matrix");
  if (!payoff.allFinite()) throw InvalidArgumentError("matrix_game_solve: non-finite payoff");
  if (m == 1 || n == 1) return pure_solution(payoff);

  // max sum(y) s.t. (A + shift) y <= 1, y >= 0. Then value = 1/sum(y) - shift.
  const double shift = 1.0 - payoff.minCoeff();
  const Eigen::Index cols = n + m;  // y, then slacks
  Matrix tab = Matrix::Zero(m + 1, cols + 1);
  tab.topLeftCorner(m, n) = payoff.array() + shift;
  tab.block(0, n, m, m).setIdentity();
  tab.block(0, cols, m, 1).setOnes();
  tab.block(m, 0, 1, n).setConstant(-1.0);

  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  int pivots = 0;
  for (;;) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (tab(m, j) < -kPivotEps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    if (++pivots > max_pivots) {
      std::ostringstream os;
      os << "matrix_game_solve: simplex exceeded " << max_pivots << " pivots on a " << m << "x" << n
         << " game";
      throw SimplexError(os.str());
    }
    Eigen::Index leave = -1;
    double best = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double a = tab(i, enter);
      if (a <= kPivotEps) continue;
      const double ratio = tab(i, cols) / a;
      if (leave < 0 || ratio < best - 1e-15 ||
          (std::abs(ratio - best) <= 1e-15 &&
           basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
        leave = i;
        best = ratio;
      }
    }
    if (leave < 0) throw SimplexError("matrix_game_solve: unbounded LP (should be impossible after shift)");
    tab.row(leave) /= tab(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i != leave && tab(i, enter) != 0.0) tab.row(i) -= tab(i, enter) * tab.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  Vector y = Vector::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto b = basis[static_cast<std::size_t>(i)];
    if (b < n) y[b] = tab(i, cols);
  }
  Vector x = tab.block(m, n, 1, m).transpose();  // duals from slack reduced costs
  const double total = tab(m, cols);

  MinimaxSolution out;
  out.column_strategy = (y / y.sum()).cwiseMax(0.0);
  out.row_strategy = (x / x.sum()).cwiseMax(0.0);
  out.column_strategy /= out.column_strategy.sum();
  out.row_strategy /= out.row_strategy.sum();
  out.value = 1.0 / total - shift;
  return out;
}

double matrix_game_value(const Matrix& payoff) {
  if (payoff.cols() == 1) return payoff.col(0).maxCoeff();
  if (payoff.rows() == 1) return payoff.row(0).minCoeff();
  return matrix_game_solve(payoff).value;
}

}  // namespace rootsa
