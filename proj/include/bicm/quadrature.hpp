#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "bicm/error.hpp"

namespace bicm {

/// Gauss-Hermite rule for the weight e^{-t^2}: nodes sorted ascending and
/// exactly antisymmetric, weights exactly symmetric.
template <typename Scalar>
struct QuadratureRule {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector nodes;
  Vector weights;

  int order() const { return static_cast<int>(nodes.size()); }
};

using QuadratureRuled = QuadratureRule<double>;

inline constexpr int kMaxQuadratureOrder = 128;
inline constexpr int kDefaultQuadratureOrder = 128;

namespace detail {

// Orthonormal Hermite polynomials p_0..p_{n} at x (weight e^{-t^2}).
// Returns p_n; `sum_sq` receives sum_{k<n} p_k^2 and `prev` p_{n-1}.
template <typename Scalar>
Scalar orthonormal_hermite(int n, Scalar x, Scalar& prev, Scalar& sum_sq) {
  using std::sqrt;
  const Scalar p0 = Scalar(1) / sqrt(sqrt(std::numbers::pi_v<Scalar>));
  Scalar pkm1 = 0;
  Scalar pk = p0;
  sum_sq = 0;
  for (int k = 0; k < n; ++k) {
    sum_sq += pk * pk;
    const Scalar next = sqrt(Scalar(2) / Scalar(k + 1)) * x * pk -
                        sqrt(Scalar(k) / Scalar(k + 1)) * pkm1;
    pkm1 = pk;
    pk = next;
  }
  prev = pkm1;
  return pk;
}

}  // namespace detail

/// Golub-Welsch: the nodes are the eigenvalues of the symmetric tridiagonal
/// Jacobi matrix (off-diagonal sqrt(k/2)). Each node is then polished by
/// Newton steps on the orthonormal recurrence and the weights are the
/// Christoffel numbers 1 / sum_k p_k(x)^2, which keeps tiny tail weights
/// accurate to full relative precision.
template <typename Scalar = double>
QuadratureRule<Scalar> gauss_hermite(int n) {
  using std::abs;
  using std::sqrt;
  if (n < 1 || n > kMaxQuadratureOrder) {
    throw InvalidArgument("quadrature order " + std::to_string(n) + " outside 1.." +
                          std::to_string(kMaxQuadratureOrder));
  }
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = typename QuadratureRule<Scalar>::Vector;

  Vector diag = Vector::Zero(n);
  Vector sub(n > 1 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) sub[k - 1] = sqrt(Scalar(k) / Scalar(2));

  Eigen::SelfAdjointEigenSolver<Matrix> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("Jacobi eigenproblem did not converge for n=" + std::to_string(n));
  }
  Vector x = solver.eigenvalues();  // ascending

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (int i = 0; i < n; ++i) {
    for (int it = 0; it < 8; ++it) {
      Scalar prev, sum_sq;
      const Scalar pn = detail::orthonormal_hermite(n, x[i], prev, sum_sq);
      const Scalar dpn = sqrt(Scalar(2 * n)) * prev;
      const Scalar step = pn / dpn;
      x[i] -= step;
      if (abs(step) <= 4 * eps * (Scalar(1) + abs(x[i]))) break;
    }
  }

  QuadratureRule<Scalar> rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    Scalar prev, sum_sq;
    detail::orthonormal_hermite(n, x[i], prev, sum_sq);
    rule.nodes[i] = x[i];
    rule.weights[i] = Scalar(1) / sum_sq;
  }
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const Scalar node = (rule.nodes[j] - rule.nodes[i]) / 2;
    const Scalar weight = (rule.weights[i] + rule.weights[j]) / 2;
    rule.nodes[i] = -node;
    rule.nodes[j] = node;
    rule.weights[i] = rule.weights[j] = weight;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0;
  return rule;
}

/// Sum_i w_i f(t_i), accumulated over mirrored node pairs so that odd
/// integrands cancel exactly.
template <typename Scalar, typename F>
Scalar integrate(const QuadratureRule<Scalar>& rule, F&& f) {
  const int n = rule.order();
  Scalar acc = 0;
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    acc += rule.weights[i] * (f(rule.nodes[i]) + f(rule.nodes[j]));
  }
  if (n % 2 == 1) acc += rule.weights[n / 2] * f(rule.nodes[n / 2]);
  return acc;
}

/// E[f(Z)] for Z ~ CN(0,1) (density e^{-|z|^2}/pi, variance 1/2 per real
/// component), via the tensor-product rule (1/pi) sum_jk w_j w_k f(t_j + i t_k).
/// Mirrored in-phase nodes are paired as in `integrate`.
template <typename F>
double expect_complex_gaussian(const QuadratureRuled& rule, F&& f) {
  const int n = rule.order();
  auto checked = [&](int j, int k) {
    const std::complex<double> z(rule.nodes[j], rule.nodes[k]);
    const double v = f(z);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os.precision(17);
      os << "non-finite integrand " << v << " at node z=(" << z.real() << "," << z.imag()
         << ")";
      throw NumericalError(os.str());
    }
    return v;
  };
  double acc = 0.0;
  for (int j = 0; j < (n + 1) / 2; ++j) {
    const int jm = n - 1 - j;
    double inner = 0.0;
    for (int k = 0; k < n; ++k) {
      const double pair = jm == j ? checked(j, k) : checked(j, k) + checked(jm, k);
      inner += rule.weights[k] * pair;
    }
    acc += rule.weights[j] * inner;
  }
  return acc / std::numbers::pi;
}

/// Flattened tensor rule for E[f(Z)], Z ~ CN(0,1): node (re[i], im[i]) with
/// weight[i] = w_j w_k / pi. Products below `weight_floor` are dropped; with
/// the default floor the discarded mass is below 1e-23.
struct ComplexGaussianRule {
  Eigen::ArrayXd re;
  Eigen::ArrayXd im;
  Eigen::ArrayXd weight;

  Eigen::Index size() const { return weight.size(); }
};

inline constexpr double kTensorWeightFloor = 1e-28;

inline ComplexGaussianRule complex_gaussian_rule(const QuadratureRuled& rule,
                                                 double weight_floor = kTensorWeightFloor) {
  const int n = rule.order();
  ComplexGaussianRule t;
  t.re.resize(n * n);
  t.im.resize(n * n);
  t.weight.resize(n * n);
  Eigen::Index count = 0;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      const double w = rule.weights[j] * rule.weights[k] / std::numbers::pi;
      if (w < weight_floor) continue;
      t.re[count] = rule.nodes[j];
      t.im[count] = rule.nodes[k];
      t.weight[count] = w;
      ++count;
    }
  }
  t.re.conservativeResize(count);
  t.im.conservativeResize(count);
  t.weight.conservativeResize(count);
  return t;
}

}  // namespace bicm
