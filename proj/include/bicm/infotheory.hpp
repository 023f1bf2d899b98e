#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bicm/constellation.hpp"
#include "bicm/quadrature.hpp"

namespace bicm {

/// Linear signal-to-noise ratio of y = sqrt(snr) x + z, z ~ CN(0,1).
class Snr {
 public:
  Snr() = default;
  explicit Snr(double linear);

  static Snr from_db(double db);

  double linear() const { return value_; }
  double db() const;

  friend bool operator==(Snr, Snr) = default;
  friend auto operator<=>(Snr, Snr) = default;

 private:
  double value_ = 0.0;
};

// All information quantities are in nats. Averages over a point set are
// uniform over that set, so the same routines serve full constellations and
// the subsets X_b^i.

/// Minimum mean-squared error of estimating a uniform input from A from
/// y = sqrt(snr) a + z. The conditional-mean estimator is evaluated with
/// max-subtracted exponents.
double mmse_cm(const PointVector& a, Snr snr, const QuadratureRuled& rule);
double mmse_cm(const Constellation& c, Snr snr, const QuadratureRuled& rule);
double mmse_cm(const SubConstellation& a, Snr snr, const QuadratureRuled& rule);

/// 1 / (1 + snr).
double gaussian_mmse(Snr snr);
/// log(1 + snr).
double gaussian_mi(Snr snr);

/// Coded-modulation mutual information I(A; Y) for uniform A.
double mi_cm(const PointVector& a, Snr snr, const QuadratureRuled& rule);
double mi_cm(const Constellation& c, Snr snr, const QuadratureRuled& rule);
double mi_cm(const SubConstellation& a, Snr snr, const QuadratureRuled& rule);

/// BICM mutual information as the sum of the m per-bit channel informations.
double mi_bicm_direct(const Constellation& c, Snr snr, const QuadratureRuled& rule);

/// BICM mutual information as sum_i 1/2 sum_b (I_X - I_{X_b^i}).
double mi_bicm_decomposed(const Constellation& c, Snr snr, const QuadratureRuled& rule);

/// d I_bicm / d snr = sum_i 1/2 sum_b (mmse_X - mmse_{X_b^i}).
/// At snr = 0 this returns low_snr_slope(c).
double bicm_mi_derivative(const Constellation& c, Snr snr, const QuadratureRuled& rule);

/// sum_i 1/2 sum_b |E_{X_b^i}[X]|^2, the limit of the BICM derivative as snr -> 0.
double low_snr_slope(const Constellation& c);

/// E|A|^2 - |E A|^2.
double mmse_zero_snr_limit(const PointVector& a);
double mmse_zero_snr_limit(const Constellation& c);
double mmse_zero_snr_limit(const SubConstellation& a);

enum class CurveKind { mi_cm, mi_bicm, mmse, bicm_derivative };

std::string to_string(CurveKind kind);

/// A function of snr sampled on a strictly increasing grid.
struct Curve {
  CurveKind kind = CurveKind::mi_cm;
  std::vector<Snr> snr_grid;
  Eigen::VectorXd values;
};

/// Evaluates `kind` at every grid point. Points are independent and may be
/// computed on several threads; each result lands in its own slot.
Curve sweep(const Constellation& c, std::span<const Snr> grid, CurveKind kind,
            const QuadratureRuled& rule);

/// `steps` points evenly spaced in dB from start_db to stop_db inclusive.
std::vector<Snr> db_grid(double start_db, double stop_db, int steps);

}  // namespace bicm
