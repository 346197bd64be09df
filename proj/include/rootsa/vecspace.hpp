#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace rootsa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// True when every entry is finite.
bool all_finite(const Vector& v);

// ---------------------------------------------------------------------------
// Norms and seminorms
// ---------------------------------------------------------------------------

struct SupNorm {};

/// max_i |v_i| / w_i
struct WeightedSupNorm {
  Vector weights;
};

/// max v - min v. A norm on the quotient modulo constant vectors.
struct SpanSeminorm {};

/// sup over a finite symmetric family of linear functionals: max_k <u_k, v>.
/// Only one of each +/- pair needs to be listed; the absolute value is taken.
struct CoordinateSetSeminorm {
  std::vector<Vector> functionals;
  double domination = 1.0;  // recorded factor D with |||v||| <= D ||v||
};

/// Evaluation rule for one of the supported (semi)norms.
class NormSpec {
 public:
  using Kind = std::variant<SupNorm, WeightedSupNorm, SpanSeminorm, CoordinateSetSeminorm>;

  NormSpec() : kind_(SupNorm{}) {}

  static NormSpec sup() { return NormSpec(SupNorm{}); }
  static NormSpec weighted_sup(Vector weights);
  static NormSpec span() { return NormSpec(SpanSeminorm{}); }
  static NormSpec coordinate_set(std::vector<Vector> functionals, double domination = 1.0);

  const Kind& kind() const { return kind_; }
  bool is_span() const { return std::holds_alternative<SpanSeminorm>(kind_); }
  std::string name() const;

  /// Functionals u with ||v|| = max_u |<u, v>| for a space of dimension `dim`.
  /// For the span seminorm these are e_i - e_j over pairs i < j.
  std::vector<Vector> skeleton(std::size_t dim) const;

 private:
  explicit NormSpec(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

double norm_eval(const NormSpec& spec, const Vector& v);

/// Operator norm induced by the sup norm: max absolute row sum.
double sup_operator_norm(const Matrix& a);

// ---------------------------------------------------------------------------
// Linear operators
// ---------------------------------------------------------------------------

Vector apply_operator(const Matrix& a, const Vector& v);

/// Solves (I - A) x = v. Dense LU with partial pivoting; falls back to a
/// Neumann series when the reciprocal condition estimate is below 1e-12.
/// Throws NotContractiveError when neither route reaches `tol`.
Vector resolvent_apply(const Matrix& a, const Vector& v, double tol = 1e-10);

/// Dense matrix R with R v = (I - A)^{-1} v.
Matrix resolvent_matrix(const Matrix& a, double tol = 1e-10);

struct QuotientSolve {
  Vector solution;
  double offset = 0.0;  // mu = xi^T v
};

/// Solves (I - P) x = v - mu 1 with xi^T x = 0 for a row-stochastic P with
/// stationary distribution xi. Throws InvalidArgumentError if xi is not stationary.
QuotientSolve quotient_solve(const Matrix& p, const Vector& xi, const Vector& v,
                             double tol = 1e-10);

/// Dense matrix representing (I - P)^dagger on the xi-mean-zero representatives.
Matrix quotient_resolvent_matrix(const Matrix& p, const Vector& xi);

/// Stationary distribution of an irreducible row-stochastic matrix.
Vector stationary_distribution(const Matrix& p);

/// Canonical representative of v modulo constants: xi-weighted mean zero, or
/// min-entry zero when xi is empty.
Vector span_canonical(const Vector& v, const Vector& xi = Vector());

// ---------------------------------------------------------------------------
// Rate regression
// ---------------------------------------------------------------------------

struct RatePoint {
  double n = 0.0;
  double y = 0.0;
};

/// Least-squares slope of log y against log n.
double rate_slope(std::span<const RatePoint> points);

}  // namespace rootsa
