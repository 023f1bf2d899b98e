#include "bicm/infotheory.hpp"

#include <algorithm>
#include <array>
#include <sstream>
#include <cmath>
#include <numbers>

#include "bicm/error.hpp"
#include "parallel.hpp"

namespace bicm {

namespace {

void require_nonempty(const PointVector& a) {
  if (a.size() == 0) throw InvalidArgument("empty point set");
}

// Exponents d(i, j) = -|sqrt(snr) (a_k - a_j) + z_i|^2 over all tensor nodes
// z_i, and their row maxima. Column k is -|z_i|^2.
void fill_exponents(const PointVector& a, Eigen::Index k, double amplitude,
                    const ComplexGaussianRule& t, Eigen::ArrayXXd& d, Eigen::ArrayXd& dmax) {
  d.resize(t.size(), a.size());
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const Complex off = amplitude * (a[k] - a[j]);
    d.col(j) = -((t.re + off.real()).square() + (t.im + off.imag()).square());
  }
  dmax = d.col(0);
  for (Eigen::Index j = 1; j < a.size(); ++j) dmax = dmax.max(d.col(j));
}

// sum_i weight_i f_i, or an error naming the first node where f is not finite.
double weighted_total(const ComplexGaussianRule& t, const Eigen::ArrayXd& f, const char* what) {
  const double total = (t.weight * f).sum();
  if (std::isfinite(total)) return total;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (!std::isfinite(f[i])) {
      std::ostringstream os;
      os.precision(17);
      os << "non-finite " << what << " integrand " << f[i] << " at node z=(" << t.re[i] << ","
         << t.im[i] << ")";
      throw NumericalError(os.str());
    }
  }
  throw NumericalError(std::string("non-finite ") + what);
}

}  // namespace

Snr::Snr(double linear) : value_(linear) {
  if (!(linear >= 0.0) || !std::isfinite(linear)) {
    throw InvalidArgument("snr must be finite and non-negative, got " + std::to_string(linear));
  }
}

Snr Snr::from_db(double db) { return Snr(std::pow(10.0, db / 10.0)); }

double Snr::db() const { return 10.0 * std::log10(value_); }

double mmse_cm(const PointVector& a, Snr snr, const QuadratureRuled& rule) {
  require_nonempty(a);
  const auto tensor = complex_gaussian_rule(rule);
  const double amplitude = std::sqrt(snr.linear());
  const Eigen::VectorXd re = a.real();
  const Eigen::VectorXd im = a.imag();
  Eigen::ArrayXXd d;
  Eigen::ArrayXd dmax;
  double total = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    fill_exponents(a, k, amplitude, tensor, d, dmax);
    const Eigen::ArrayXXd e = (d.colwise() - dmax).exp();
    const Eigen::ArrayXd den = e.rowwise().sum();
    const Eigen::ArrayXd est_re = (e.matrix() * re).array() / den;
    const Eigen::ArrayXd est_im = (e.matrix() * im).array() / den;
    // |a - E[A | y]|^2: equal in expectation to E|A|^2 - |E[A | y]|^2 but
    // never negative when the error is tiny.
    const Eigen::ArrayXd err = (a[k].real() - est_re).square() + (a[k].imag() - est_im).square();
    total += weighted_total(tensor, err, "mmse");
  }
  return total / static_cast<double>(a.size());
}

double mmse_cm(const Constellation& c, Snr snr, const QuadratureRuled& rule) {
  return mmse_cm(c.points(), snr, rule);
}

double mmse_cm(const SubConstellation& a, Snr snr, const QuadratureRuled& rule) {
  return mmse_cm(a.points, snr, rule);
}

double gaussian_mmse(Snr snr) { return 1.0 / (1.0 + snr.linear()); }

double gaussian_mi(Snr snr) { return std::log1p(snr.linear()); }

double mi_cm(const PointVector& a, Snr snr, const QuadratureRuled& rule) {
  require_nonempty(a);
  const auto tensor = complex_gaussian_rule(rule);
  const double amplitude = std::sqrt(snr.linear());
  const double size = static_cast<double>(a.size());
  Eigen::ArrayXXd d;
  Eigen::ArrayXd dmax;
  double total = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    fill_exponents(a, k, amplitude, tensor, d, dmax);
    const Eigen::ArrayXd den = (d.colwise() - dmax).exp().rowwise().sum();
    // log p(y|a_k) / p(y) with the common max factored out.
    const Eigen::ArrayXd f = (d.col(k) - dmax) - (den / size).log();
    total += weighted_total(tensor, f, "mutual information");
  }
  return total / size;
}

double mi_cm(const Constellation& c, Snr snr, const QuadratureRuled& rule) {
  return mi_cm(c.points(), snr, rule);
}

double mi_cm(const SubConstellation& a, Snr snr, const QuadratureRuled& rule) {
  return mi_cm(a.points, snr, rule);
}

double mi_bicm_direct(const Constellation& c, Snr snr, const QuadratureRuled& rule) {
  const PointVector& x = c.points();
  const auto tensor = complex_gaussian_rule(rule);
  const double amplitude = std::sqrt(snr.linear());
  const int m = c.bits();

  // members[i - 1][b]: indices of X_b^i.
  std::vector<std::array<std::vector<Eigen::Index>, 2>> members(static_cast<std::size_t>(m));
  for (int i = 1; i <= m; ++i) {
    for (int j = 0; j < c.size(); ++j) members[i - 1][c.bit(j, i)].push_back(j);
  }

  Eigen::ArrayXXd d;
  Eigen::ArrayXd dmax;
  double total = 0.0;
  for (int k = 0; k < c.size(); ++k) {
    fill_exponents(x, k, amplitude, tensor, d, dmax);
    const Eigen::ArrayXd den = (d.colwise() - dmax).exp().rowwise().sum();
    Eigen::ArrayXd f = Eigen::ArrayXd::Zero(tensor.size());
    for (int i = 1; i <= m; ++i) {
      const auto& same = members[i - 1][c.bit(k, i)];
      Eigen::ArrayXd smax = d.col(same.front());
      for (auto j : same) smax = smax.max(d.col(j));
      Eigen::ArrayXd ssum = Eigen::ArrayXd::Zero(tensor.size());
      for (auto j : same) ssum += (d.col(j) - smax).exp();
      // log( sum_{X_b^i} e^d / (1/2 sum_X e^d) ), each sum with its own max.
      f += (smax - dmax) + (2.0 * ssum / den).log();
    }
    total += weighted_total(tensor, f, "BICM mutual information");
  }
  return total / static_cast<double>(c.size());
}

double mi_bicm_decomposed(const Constellation& c, Snr snr, const QuadratureRuled& rule) {
  const double full = mi_cm(c, snr, rule);
  double subsets = 0.0;
  for (int i = 1; i <= c.bits(); ++i) {
    for (int b = 0; b <= 1; ++b) subsets += mi_cm(subset(c, i, b), snr, rule);
  }
  return c.bits() * full - 0.5 * subsets;
}

double bicm_mi_derivative(const Constellation& c, Snr snr, const QuadratureRuled& rule) {
  if (snr.linear() == 0.0) return low_snr_slope(c);
  const double full = mmse_cm(c, snr, rule);
  double subsets = 0.0;
  for (int i = 1; i <= c.bits(); ++i) {
    for (int b = 0; b <= 1; ++b) subsets += mmse_cm(subset(c, i, b), snr, rule);
  }
  return c.bits() * full - 0.5 * subsets;
}

double low_snr_slope(const Constellation& c) {
  double slope = 0.0;
  for (int i = 1; i <= c.bits(); ++i) {
    for (int b = 0; b <= 1; ++b) slope += 0.5 * std::norm(subset(c, i, b).points.mean());
  }
  return slope;
}

double mmse_zero_snr_limit(const PointVector& a) {
  require_nonempty(a);
  return a.squaredNorm() / static_cast<double>(a.size()) - std::norm(a.mean());
}

double mmse_zero_snr_limit(const Constellation& c) { return mmse_zero_snr_limit(c.points()); }

double mmse_zero_snr_limit(const SubConstellation& a) { return mmse_zero_snr_limit(a.points); }

std::string to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::mi_cm: return "mi_cm";
    case CurveKind::mi_bicm: return "mi_bicm";
    case CurveKind::mmse: return "mmse";
    case CurveKind::bicm_derivative: return "bicm_derivative";
  }
  return "?";
}

Curve sweep(const Constellation& c, std::span<const Snr> grid, CurveKind kind,
            const QuadratureRuled& rule) {
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k - 1] < grid[k])) throw InvalidArgument("snr grid is not strictly increasing");
  }
  Curve curve;
  curve.kind = kind;
  curve.snr_grid.assign(grid.begin(), grid.end());
  curve.values.resize(static_cast<Eigen::Index>(grid.size()));
  detail::parallel_for(grid.size(), [&](std::size_t k) {
    const Snr snr = grid[k];
    double v = 0.0;
    switch (kind) {
      case CurveKind::mi_cm: v = mi_cm(c, snr, rule); break;
      case CurveKind::mi_bicm: v = mi_bicm_direct(c, snr, rule); break;
      case CurveKind::mmse: v = mmse_cm(c, snr, rule); break;
      case CurveKind::bicm_derivative: v = bicm_mi_derivative(c, snr, rule); break;
    }
    curve.values[static_cast<Eigen::Index>(k)] = v;
  });
  return curve;
}

std::vector<Snr> db_grid(double start_db, double stop_db, int steps) {
  if (steps < 1) throw InvalidArgument("snr grid needs at least one point");
  if (steps == 1) {
    if (start_db != stop_db) throw InvalidArgument("a one-point grid needs start == stop");
    return {Snr::from_db(start_db)};
  }
  if (!(start_db < stop_db)) throw InvalidArgument("snr grid start must be below stop");
  std::vector<Snr> grid;
  grid.reserve(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) / (steps - 1);
    grid.push_back(Snr::from_db(k + 1 == steps ? stop_db : start_db + t * (stop_db - start_db)));
  }
  return grid;
}

}  // namespace bicm
