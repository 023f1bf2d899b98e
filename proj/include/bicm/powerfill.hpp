#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bicm/constellation.hpp"
#include "bicm/infotheory.hpp"
#include "bicm/quadrature.hpp"

namespace bicm {

/// How a channel's information is measured. `gaussian` is the Gaussian-input
/// reference with I = log(1 + s) and dI/ds = 1/(1 + s); it ignores the
/// constellation.
enum class ChannelMode { cm, bicm, gaussian };

ChannelMode parse_channel_mode(std::string_view name);
std::string to_string(ChannelMode mode);

struct Channel {
  double gain = 1.0;
  std::shared_ptr<const Constellation> constellation;
  ChannelMode mode = ChannelMode::cm;
  std::string name;  // constellation id or path, for reporting
};

/// K parallel channels sharing the power budget; channel k sees snr g_k p_k.
struct ParallelChannelSet {
  std::vector<Channel> channels;
  double budget = 1.0;

  void validate() const;
};

struct Allocation {
  std::vector<double> powers;
  double multiplier = 0.0;    // lambda
  double objective = 0.0;     // total mutual information, nats
  double kkt_residual = 0.0;  // max_k |u_k(p_k) - lambda| over active k, and
                              // max(0, u_k(0) - lambda) over inactive k
  bool monotone = true;       // every marginal utility was non-increasing
};

inline constexpr double kDefaultAllocationTol = 1e-6;

/// I_k(g p): mutual information of one channel at power p.
double channel_information(const Channel& ch, double power, const QuadratureRuled& rule);

/// dI_k(g p)/dp = g D(g p), with D the MMSE (cm), the BICM derivative
/// (bicm) or 1/(1+s) (gaussian).
double marginal_utility(const Channel& ch, double power, const QuadratureRuled& rule);

/// Maximizes sum_k I_k(g_k p_k) subject to sum_k p_k = budget, p_k >= 0.
///
/// Bisection-style root finding on the multiplier lambda wraps a per-channel
/// inversion p_k(lambda) = max{p : u_k(p) >= lambda}. Each channel's utility
/// is first tabulated on a log-spaced snr grid; non-monotone tables are
/// refined and the inversion brackets the last crossing. Channels whose
/// utility never exceeds lambda get exactly zero power. When any table is
/// non-monotone the result is checked with `perturbation_gain`.
///
/// Throws NumericalError if lambda cannot be bracketed, if no multiplier
/// meets the budget (a jump in the total-power curve), or if the final KKT
/// residual exceeds `tol`.
Allocation allocate(const ParallelChannelSet& set, double tol = kDefaultAllocationTol,
                    const QuadratureRuled& rule = gauss_hermite(kDefaultQuadratureOrder));

/// Largest objective increase found by moving `fraction * budget` of power
/// between any two active channels (in both directions).
double perturbation_gain(const ParallelChannelSet& set, const Allocation& alloc,
                         double fraction, const QuadratureRuled& rule);

/// Closed-form water-filling for Gaussian inputs: p_k = max(0, mu - 1/g_k)
/// with the water level mu set by the budget; multiplier = 1/mu.
Allocation gaussian_reference_allocate(std::span<const double> gains, double budget);

/// Problem file: `budget <P>` followed by `<gain> <constellation> <mode>`
/// lines, where <constellation> is a family,m,labeling id or a constellation
/// file path (relative paths resolve against `base_dir`). `#` comments.
ParallelChannelSet load_problem(std::istream& in, const std::string& base_dir = ".");
ParallelChannelSet load_problem_file(const std::string& path);

}  // namespace bicm
