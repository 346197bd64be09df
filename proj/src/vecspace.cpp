#include "rootsa/vecspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "rootsa/errors.hpp"

namespace rootsa {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_square(const Matrix& a, std::size_t dim, const char* what) {
  if (a.rows() != a.cols() || static_cast<std::size_t>(a.rows()) != dim) {
    std::ostringstream os;
    os << what << ": operator is " << a.rows() << "x" << a.cols() << ", vector has dim " << dim;
    throw DimensionError(os.str());
  }
}

}  // namespace

bool all_finite(const Vector& v) { return v.allFinite(); }

NormSpec NormSpec::weighted_sup(Vector weights) {
  if (weights.size() == 0 || (weights.array() <= 0.0).any() || !weights.allFinite()) {
    throw InvalidArgumentError("weighted sup norm: weights must be finite and strictly positive");
  }
  return NormSpec(WeightedSupNorm{std::move(weights)});
}

NormSpec NormSpec::coordinate_set(std::vector<Vector> functionals, double domination) {
  if (functionals.empty()) {
    throw InvalidArgumentError("coordinate-set seminorm needs at least one functional");
  }
  const auto dim = functionals.front().size();
  for (const auto& u : functionals) {
    if (u.size() != dim) throw DimensionError("coordinate-set seminorm: ragged functionals");
    // dual of the sup norm is l1
    if (u.lpNorm<1>() > domination * (1.0 + 1e-12)) {
      throw InvalidArgumentError("coordinate-set seminorm: functional exceeds domination factor");
    }
  }
  return NormSpec(CoordinateSetSeminorm{std::move(functionals), domination});
}

std::string NormSpec::name() const {
  return std::visit(overloaded{[](const SupNorm&) { return std::string("sup"); },
                               [](const WeightedSupNorm&) { return std::string("weighted_sup"); },
                               [](const SpanSeminorm&) { return std::string("span"); },
                               [](const CoordinateSetSeminorm&) { return std::string("coordinate_set"); }},
                    kind_);
}

std::vector<Vector> NormSpec::skeleton(std::size_t dim) const {
  std::vector<Vector> out;
  const auto n = static_cast<Eigen::Index>(dim);
  std::visit(overloaded{[&](const SupNorm&) {
                          for (Eigen::Index i = 0; i < n; ++i) out.push_back(Vector::Unit(n, i));
                        },
                        [&](const WeightedSupNorm& w) {
                          if (w.weights.size() != n) throw DimensionError("weighted sup: weight dim mismatch");
                          for (Eigen::Index i = 0; i < n; ++i) out.push_back(Vector::Unit(n, i) / w.weights[i]);
                        },
                        [&](const SpanSeminorm&) {
                          for (Eigen::Index i = 0; i < n; ++i)
                            for (Eigen::Index j = i + 1; j < n; ++j)
                              out.push_back(Vector::Unit(n, i) - Vector::Unit(n, j));
                        },
                        [&](const CoordinateSetSeminorm& c) {
                          for (const auto& u : c.functionals) {
                            if (u.size() != n) throw DimensionError("coordinate set: functional dim mismatch");
                            out.push_back(u);
                          }
                        }},
             kind_);
  return out;
}

double norm_eval(const NormSpec& spec, const Vector& v) {
  return std::visit(
      overloaded{[&](const SupNorm&) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); },
                 [&](const WeightedSupNorm& w) {
                   if (w.weights.size() != v.size()) {
                     throw DimensionError("norm_eval: weight vector and argument differ in dimension");
                   }
                   return v.size() == 0 ? 0.0 : v.cwiseAbs().cwiseQuotient(w.weights).maxCoeff();
                 },
                 [&](const SpanSeminorm&) { return v.size() == 0 ? 0.0 : v.maxCoeff() - v.minCoeff(); },
                 [&](const CoordinateSetSeminorm& c) {
                   double best = 0.0;
                   for (const auto& u : c.functionals) {
                     if (u.size() != v.size()) throw DimensionError("norm_eval: functional dim mismatch");
                     best = std::max(best, std::abs(u.dot(v)));
                   }
                   return best;
                 }},
      spec.kind());
}

double sup_operator_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

Vector apply_operator(const Matrix& a, const Vector& v) {
  if (a.cols() != v.size()) {
    std::ostringstream os;
    os << "apply_operator: operator has " << a.cols() << " columns, vector has dim " << v.size();
    throw DimensionError(os.str());
  }
  return a * v;
}

namespace {

Vector neumann_solve(const Matrix& a, const Vector& v, double tol) {
  constexpr int kMaxTerms = 1'000'000;
  Vector x = v;
  for (int k = 0; k < kMaxTerms; ++k) {
    Vector next = v + a * x;
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > 1e300) break;
    x = std::move(next);
    const double residual = (x - a * x - v).cwiseAbs().maxCoeff();
    if (residual <= tol) return x;
  }
  throw NotContractiveError("resolvent_apply: Neumann series did not converge; I - A is (near) singular");
}

}  // namespace

Vector resolvent_apply(const Matrix& a, const Vector& v, double tol) {
  require_square(a, static_cast<std::size_t>(v.size()), "resolvent_apply");
  if (!(tol > 0.0)) throw InvalidArgumentError("resolvent_apply: tol must be positive");
  const auto n = a.rows();
  if (n == 0) return v;
  const Matrix m = Matrix::Identity(n, n) - a;
  Eigen::PartialPivLU<Matrix> lu(m);
  if (lu.rcond() >= 1e-12) {
    Vector x = lu.solve(v);
    if (x.allFinite() && (m * x - v).cwiseAbs().maxCoeff() <= tol) return x;
  }
  return neumann_solve(a, v, tol);
}

Matrix resolvent_matrix(const Matrix& a, double tol) {
  const auto n = a.rows();
  Matrix r(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    r.col(j) = resolvent_apply(a, Vector::Unit(n, j), tol);
  }
  return r;
}

namespace {

void require_stationary(const Matrix& p, const Vector& xi, double tol) {
  const double residual = (xi.transpose() * p - xi.transpose()).cwiseAbs().maxCoeff();
  if (!(residual <= tol) || std::abs(xi.sum() - 1.0) > tol) {
    std::ostringstream os;
    os << "quotient_solve: xi is not a stationary distribution of P (residual " << residual << ", sum "
       << xi.sum() << ")";
    throw InvalidArgumentError(os.str());
  }
}

Eigen::PartialPivLU<Matrix> augmented_lu(const Matrix& p, const Vector& xi) {
  const auto n = p.rows();
  Matrix aug = Matrix::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = Matrix::Identity(n, n) - p;
  aug.topRightCorner(n, 1).setOnes();
  aug.bottomLeftCorner(1, n) = xi.transpose();
  Eigen::PartialPivLU<Matrix> lu(aug);
  if (lu.rcond() < 1e-14) {
    throw NotContractiveError("quotient_solve: augmented system is singular; chain is not irreducible");
  }
  return lu;
}

}  // namespace

QuotientSolve quotient_solve(const Matrix& p, const Vector& xi, const Vector& v, double tol) {
  require_square(p, static_cast<std::size_t>(v.size()), "quotient_solve");
  if (xi.size() != v.size()) throw DimensionError("quotient_solve: xi dimension mismatch");
  require_stationary(p, xi, std::max(tol, 1e-10));
  const auto n = p.rows();
  auto lu = augmented_lu(p, xi);
  Vector rhs(n + 1);
  rhs.head(n) = v;
  rhs[n] = 0.0;
  const Vector sol = lu.solve(rhs);
  QuotientSolve out{sol.head(n), sol[n]};
  const Vector residual = out.solution - p * out.solution + Vector::Constant(n, out.offset) - v;
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  if (!(residual.cwiseAbs().maxCoeff() <= tol * scale)) {
    std::ostringstream os;
    os << "quotient_solve: inconsistent system, residual " << residual.cwiseAbs().maxCoeff();
    throw InvalidArgumentError(os.str());
  }
  return out;
}

Matrix quotient_resolvent_matrix(const Matrix& p, const Vector& xi) {
  const auto n = p.rows();
  if (p.cols() != n || xi.size() != n) throw DimensionError("quotient_resolvent_matrix: dimension mismatch");
  require_stationary(p, xi, 1e-10);
  auto lu = augmented_lu(p, xi);
  Matrix rhs = Matrix::Zero(n + 1, n);
  rhs.topRows(n).setIdentity();
  const Matrix sol = lu.solve(rhs);
  return sol.topRows(n);
}

Vector stationary_distribution(const Matrix& p) {
  const auto n = p.rows();
  if (p.cols() != n || n == 0) throw DimensionError("stationary_distribution: P must be square and non-empty");
  Matrix m = Matrix::Identity(n, n) - p.transpose();
  m.row(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs[n - 1] = 1.0;
  Eigen::PartialPivLU<Matrix> lu(m);
  if (lu.rcond() < 1e-14) {
    throw InvalidProblemError("stationary_distribution: chain is not irreducible (singular system)");
  }
  Vector xi = lu.solve(rhs);
  xi = xi.cwiseMax(0.0);
  xi /= xi.sum();
  return xi;
}

Vector span_canonical(const Vector& v, const Vector& xi) {
  if (v.size() == 0) return v;
  if (xi.size() == 0) return v.array() - v.minCoeff();
  if (xi.size() != v.size()) throw DimensionError("span_canonical: xi dimension mismatch");
  return v.array() - xi.dot(v);
}

double rate_slope(std::span<const RatePoint> points) {
  if (points.size() < 3) throw InvalidArgumentError("rate_slope: need at least 3 points");
  double sx = 0.0, sy = 0.0;
  for (const auto& p : points) {
    if (!(p.y > 0.0) || !(p.n > 0.0)) throw InvalidArgumentError("rate_slope: n and y must be positive");
    sx += std::log(p.n);
    sy += std::log(p.y);
  }
  const double k = static_cast<double>(points.size());
  const double mx = sx / k, my = sy / k;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(p.n) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(p.y) - my);
  }
  if (sxx == 0.0) throw InvalidArgumentError("rate_slope: all n identical");
  return sxy / sxx;
}

}  // namespace rootsa
