// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion ...]   (default: all of 1..8)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "bicm/cli.hpp"
#include "bicm/montecarlo.hpp"
#include "bicm/powerfill.hpp"

using namespace bicm;

namespace {

const QuadratureRuled& rule() {
  static const auto r = gauss_hermite(kDefaultQuadratureOrder);
  return r;
}

// 20 log-spaced points in [0.01, 100]
std::vector<Snr> log_grid() {
  std::vector<Snr> g;
  for (int k = 0; k < 20; ++k) g.emplace_back(std::pow(10.0, -2.0 + 4.0 * k / 19.0));
  return g;
}

double step(Snr s) { return std::max(1e-6, 1e-4 * s.linear()); }

template <typename F>
double central_difference(F&& f, Snr s) {
  const double h = step(s);
  return (f(Snr(s.linear() + h)) - f(Snr(s.linear() - h))) / (2.0 * h);
}

struct Named {
  const char* name;
  Constellation c;
};

std::vector<Named> cm_set() {
  return {{"BPSK", build_constellation("pam,1,gray")},
          {"QPSK", build_constellation("qam,2,gray")},
          {"16-QAM Gray", build_constellation("qam,4,gray")}};
}

std::vector<Named> qam16_labelings() {
  return {{"16-QAM Gray", build_constellation("qam,4,gray")},
          {"16-QAM SP", build_constellation("qam,4,set_partitioning")}};
}

// Tracks the worst value seen and whether every check held.
struct Tally {
  bool ok = true;
  void check(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      std::printf("    violated: %s\n", what.c_str());
    }
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

bool criterion1() {
  Tally t;
  for (const auto& [name, c] : cm_set()) {
    double worst = 0.0;
    for (auto s : log_grid()) {
      const double fd = central_difference([&](Snr x) { return mi_cm(c, x, rule()); }, s);
      const double err = std::abs(fd - mmse_cm(c, s, rule()));
      worst = std::max(worst, err);
      t.check(err <= 1e-5, std::string(name) + fmt(" snr=%g: |fd - mmse| = %.3g",
                                                    s.linear(), err));
    }
    std::printf("    %-12s max |dI/dsnr - mmse| = %.3g\n", name, worst);
  }
  return t.ok;
}

bool criterion2() {
  Tally t;
  for (const auto& [name, c] : qam16_labelings()) {
    double worst = 0.0;
    for (auto s : log_grid()) {
      const double fd =
          central_difference([&](Snr x) { return mi_bicm_decomposed(c, x, rule()); }, s);
      const double err = std::abs(fd - bicm_mi_derivative(c, s, rule()));
      worst = std::max(worst, err);
      t.check(err <= 1e-5, std::string(name) + fmt(" snr=%g: |fd - derivative| = %.3g",
                                                    s.linear(), err));
    }
    std::printf("    %-12s max |dI_bicm/dsnr - derivative| = %.3g\n", name, worst);
  }
  return t.ok;
}

bool criterion3() {
  Tally t;
  auto all = cm_set();
  all.push_back({"16-QAM SP", build_constellation("qam,4,set_partitioning")});
  for (const auto& [name, c] : all) {
    double worst = 0.0;
    for (auto s : log_grid()) {
      const double err =
          std::abs(mi_bicm_direct(c, s, rule()) - mi_bicm_decomposed(c, s, rule()));
      worst = std::max(worst, err);
      t.check(err <= 1e-8, std::string(name) + fmt(" snr=%g: gap %.3g", s.linear(), err));
    }
    std::printf("    %-12s max |direct - decomposed| = %.3g\n", name, worst);
  }
  return t.ok;
}

bool criterion4() {
  Tally t;
  auto all = cm_set();
  all.push_back({"16-QAM SP", build_constellation("qam,4,set_partitioning")});
  for (const auto& [name, c] : all) {
    const double d = bicm_mi_derivative(c, Snr(1e-6), rule());
    const double slope = low_snr_slope(c);
    const bool checked = c.size() == 16;
    std::printf("    %-12s derivative(1e-6) = %.10f  slope = %.10f%s\n", name, d, slope,
                checked ? "" : "  (info)");
    // BPSK/QPSK carry a first-order term of -2 snr / -snr, visible at this snr
    if (checked) t.check(std::abs(d - slope) <= 1e-6, std::string(name) + " low-snr slope");
  }
  double worst = 0.0;
  int count = 0;
  auto zero_snr = [&](const std::string& what, const PointVector& a) {
    const double err = std::abs(mmse_cm(a, Snr(0.0), rule()) - mmse_zero_snr_limit(a));
    worst = std::max(worst, err);
    ++count;
    t.check(err <= 1e-9, what + fmt(": |mmse(0) - closed form| = %.3g", err));
  };
  for (const auto& [name, c] : all) zero_snr(name, c.points());
  for (const auto& [name, c] : qam16_labelings()) {
    for (int i = 1; i <= c.bits(); ++i) {
      for (int b = 0; b <= 1; ++b) {
        zero_snr(std::string(name) + fmt(" subset i=%g b=%g", i, b), subset(c, i, b).points);
      }
    }
  }
  std::printf("    zero-snr mmse: %d sets, max |mmse(0) - (E|A|^2 - |EA|^2)| = %.3g\n", count,
              worst);
  return t.ok;
}

bool criterion5() {
  Tally t;
  const auto grid = db_grid(-20.0, 30.0, 101);
  const auto table = cli::figure1_table(grid, rule());
  const auto& gauss = table.columns[2];
  const auto& cm = table.columns[3];
  const auto& gray = table.columns[4];
  const auto& sp = table.columns[5];

  bool exact = true;
  for (std::size_t k = 0; k < grid.size(); ++k) exact &= gauss[k] == 1.0 / (1.0 + grid[k].linear());
  std::printf("    (a) Gaussian column bitwise equal to 1/(1+snr): %s\n", exact ? "yes" : "no");
  t.check(exact, "(a)");

  double worst = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k].db() < 15.0) continue;
    if (gray[k] == cm[k]) continue;  // includes both underflowing to 0
    const double rel = std::abs(gray[k] - cm[k]) / cm[k];
    worst = std::max(worst, rel);
    t.check(rel <= 0.02, fmt("(b) %g dB: relative gap %.3g", grid[k].db(), rel));
  }
  std::printf("    (b) max relative |gray - cm| / cm at >= 15 dB: %.3g\n", worst);

  double widest = 0.0, where = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k].db() < 0.0 || grid[k].db() > 10.0) continue;
    const double rel = std::abs(sp[k] - gray[k]) / gray[k];
    if (rel > widest) {
      widest = rel;
      where = grid[k].db();
    }
  }
  std::printf("    (c) max relative |sp - gray| / gray in [0, 10] dB: %.3g at %g dB\n", widest,
              where);
  t.check(widest > 0.05, "(c)");
  return t.ok;
}

bool criterion6() {
  constexpr std::int64_t samples = 1'000'000;
  constexpr std::uint64_t seed = 1;
  Tally t;
  double worst = 0.0;
  for (const auto& [name, c] : cm_set()) {
    for (double s : {0.1, 1.0, 10.0}) {
      const Snr snr(s);
      const struct {
        const char* what;
        double quadrature;
        McEstimate mc;
      } rows[] = {
          {"mi_cm", mi_cm(c, snr, rule()), mc_mi_cm(c.points(), snr, samples, seed)},
          {"mi_bicm", mi_bicm_direct(c, snr, rule()), mc_mi_bicm(c, snr, samples, seed)},
          {"mmse_cm", mmse_cm(c, snr, rule()), mc_mmse(c.points(), snr, samples, seed)},
      };
      for (const auto& r : rows) {
        const double z = std::abs(r.mc.mean - r.quadrature) / r.mc.std_error;
        worst = std::max(worst, z);
        std::printf("    %-12s snr=%-4g %-8s quad=%.8f mc=%.8f se=%.2e  %.2f sigma\n", name, s,
                    r.what, r.quadrature, r.mc.mean, r.mc.std_error, z);
        t.check(std::abs(r.mc.mean - r.quadrature) <= 3.0 * r.mc.std_error,
                std::string(name) + " " + r.what + fmt(" snr=%g", s));
      }
    }
  }
  std::printf("    worst deviation %.2f standard errors (seed %llu, %lld samples)\n", worst,
              static_cast<unsigned long long>(seed), static_cast<long long>(samples));
  return t.ok;
}

double gaussian_moment(int k) {
  if (k % 2) return 0.0;
  return std::tgamma((k + 1) / 2.0);
}

bool criterion7() {
  Tally t;
  for (int n : {4, 8, 16, 32}) {
    const auto r = gauss_hermite(n);
    double worst_even = 0.0, worst_odd = 0.0;
    for (int k = 0; k <= 2 * n - 1; ++k) {
      const double q = integrate(r, [k](double x) { return std::pow(x, k); });
      if (k % 2) {
        worst_odd = std::max(worst_odd, std::abs(q));
      } else {
        const double exact = gaussian_moment(k);
        worst_even = std::max(worst_even, std::abs(q - exact) / exact);
      }
    }
    std::printf("    (a) n=%-2d max rel err (even k) %.3g, max abs (odd k) %.3g\n", n,
                worst_even, worst_odd);
    t.check(worst_even < 1e-10, fmt("(a) n=%g even moments", n));
    t.check(worst_odd < 1e-12, fmt("(a) n=%g odd moments", n));
  }

  const auto qam = build_constellation("qam,4,gray");
  const double gap = std::abs(mmse_cm(qam, Snr(10.0), gauss_hermite(32)) -
                              mmse_cm(qam, Snr(10.0), gauss_hermite(64)));
  std::printf("    (b) 16-QAM snr=10: |mmse(n=32) - mmse(n=64)| = %.3g, bound 1e-8\n", gap);
  t.check(gap < 1e-8, "(b) n=32 vs n=64 self-consistency");

  auto max_gap = [](int lo, int hi) {
    const auto a = gauss_hermite(lo);
    const auto b = gauss_hermite(hi);
    double worst = 0.0, where = 0.0;
    const char* at = "";
    for (const auto& [name, c] : cm_set()) {
      for (auto s : log_grid()) {
        const double gap = std::abs(mmse_cm(c, s, a) - mmse_cm(c, s, b));
        if (gap > worst) {
          worst = gap;
          at = name;
          where = s.linear();
        }
      }
    }
    std::printf("    (info) n=%d vs n=%d: %.3g at 16-QAM snr=10, grid max %.3g (%s, snr=%.4g)\n",
                lo, hi,
                std::abs(mmse_cm(build_constellation("qam,4,gray"), Snr(10.0), a) -
                         mmse_cm(build_constellation("qam,4,gray"), Snr(10.0), b)),
                worst, at, where);
  };
  max_gap(32, 64);
  max_gap(96, 128);
  return t.ok;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

bool criterion8() {
  Tally t;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.5, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    ParallelChannelSet set;
    std::vector<double> gains;
    for (int k = 0; k < 6; ++k) {
      gains.push_back(std::pow(10.0, u(rng)));
      set.channels.push_back({gains.back(), nullptr, ChannelMode::gaussian, "gaussian"});
    }
    set.budget = std::pow(10.0, u(rng) + 0.5);
    const auto got = allocate(set);
    const auto want = gaussian_reference_allocate(gains, set.budget);
    for (std::size_t k = 0; k < gains.size(); ++k) {
      worst = std::max(worst, std::abs(got.powers[k] - want.powers[k]));
    }
  }
  std::printf("    (a) max |p - water-filling| over 5 gain sets = %.3g\n", worst);
  t.check(worst <= 1e-6, "(a)");

  const auto gray = std::make_shared<const Constellation>(build_constellation("qam,4,gray"));
  const auto qpsk = std::make_shared<const Constellation>(build_constellation("qam,2,gray"));
  for (const auto& [what, c, mode, k] :
       {std::tuple{"4 x 16-QAM Gray bicm", gray, ChannelMode::bicm, 4},
        std::tuple{"3 x QPSK cm", qpsk, ChannelMode::cm, 3}}) {
    ParallelChannelSet set;
    for (int j = 0; j < k; ++j) set.channels.push_back({1.3, c, mode, ""});
    set.budget = 2.0;
    const auto a = allocate(set);
    double dev = 0.0;
    for (double p : a.powers) dev = std::max(dev, std::abs(p - set.budget / k));
    std::printf("    (b) %-20s max |p - P/K| = %.3g\n", what, dev);
    t.check(dev <= kDefaultAllocationTol, std::string("(b) ") + what);
  }

  for (double budget : {4.0, 1.0}) {
    ParallelChannelSet set;
    for (double g : {2.0, 1.0, 0.5, 0.1}) set.channels.push_back({g, gray, ChannelMode::bicm, ""});
    set.budget = budget;
    const auto a = allocate(set);
    const double gain = perturbation_gain(set, a, 0.01, rule());
    std::printf("    (c) P=%g powers {%.4f, %.4f, %.4f, %.4f}, kkt %.3g, probe gain %.3g\n",
                budget, a.powers[0], a.powers[1], a.powers[2], a.powers[3], a.kkt_residual, gain);
    t.check(a.kkt_residual <= 1e-6, fmt("(c) P=%g KKT residual", budget));
    t.check(gain <= 1e-9, fmt("(c) P=%g perturbation probe", budget));
    t.check(std::abs(sum(a.powers) - budget) <= 1e-9, fmt("(c) P=%g feasibility", budget));
  }
  return t.ok;
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::pair<const char*, std::function<bool()>>> criteria = {
      {"1", {"I-MMSE: finite difference of mi_cm vs mmse_cm", criterion1}},
      {"2", {"BICM derivative vs finite difference of decomposed MI", criterion2}},
      {"3", {"direct vs decomposed BICM mutual information", criterion3}},
      {"4", {"low-snr slope and zero-snr MMSE anchors", criterion4}},
      {"5", {"16-QAM derivative curves (Gaussian, Gray match, SP separation)", criterion5}},
      {"6", {"Monte Carlo cross-validation at 1e6 samples", criterion6}},
      {"7", {"Gauss-Hermite moment exactness and order self-consistency", criterion7}},
      {"8", {"power allocation", criterion8}},
  };
  std::vector<std::string> selected(argv + 1, argv + argc);
  if (selected.empty()) {
    for (const auto& [id, _] : criteria) selected.push_back(id);
  }
  int failed = 0;
  for (const auto& id : selected) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::fprintf(stderr, "unknown criterion '%s' (expected 1..8)\n", id.c_str());
      return 2;
    }
    std::printf("criterion %s: %s\n", id.c_str(), it->second.first);
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = it->second.second();
    } catch (const std::exception& e) {
      std::printf("    exception: %s\n", e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %s: %s (%.1f s)\n", id.c_str(), ok ? "PASS" : "FAIL", secs);
    std::fflush(stdout);
    failed += !ok;
  }
  return failed ? 1 : 0;
}
