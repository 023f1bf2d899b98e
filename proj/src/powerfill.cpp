#include "bicm/powerfill.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "bicm/error.hpp"
#include "parallel.hpp"

namespace bicm {

namespace {

// Solves f(x) = 0 on [lo, hi] with f(lo) >= 0 > f(hi) (Illinois false
// position with a bisection step whenever the bracket fails to halve).
template <typename F>
double solve_decreasing(F&& f, double lo, double hi, double f_lo, double f_hi, double rel_tol,
                        double abs_tol, int max_iter = 200) {
  int side = 0;
  double last_width = hi - lo;
  for (int it = 0; it < max_iter; ++it) {
    const double width = hi - lo;
    if (width <= rel_tol * std::abs(hi) + abs_tol) break;
    double x;
    if (it % 3 == 2 && width > 0.5 * last_width) {
      x = 0.5 * (lo + hi);
    } else {
      x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
      if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    }
    if (it % 3 == 2) last_width = width;
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (fx > 0.0) {
      lo = x;
      f_lo = fx;
      if (side == 1) f_hi *= 0.5;
      side = 1;
    } else {
      hi = x;
      f_hi = fx;
      if (side == -1) f_lo *= 0.5;
      side = -1;
    }
  }
  return 0.5 * (lo + hi);
}

// Tabulated D(s) for one (mode, constellation) pair, with its inverse.
class UtilityModel {
 public:
  UtilityModel(ChannelMode mode, std::shared_ptr<const Constellation> c,
               const QuadratureRuled& rule)
      : mode_(mode), constellation_(std::move(c)), rule_(rule) {
    tabulate(8);
    if (!monotone_) tabulate(32);
    peak_ = *std::max_element(d_.begin(), d_.end());
  }

  double derivative(double s) const {
    switch (mode_) {
      case ChannelMode::cm: return mmse_cm(*constellation_, Snr(s), rule_);
      case ChannelMode::bicm: return bicm_mi_derivative(*constellation_, Snr(s), rule_);
      case ChannelMode::gaussian: return gaussian_mmse(Snr(s));
    }
    return 0.0;
  }

  double evaluate(double s) {
    if (auto it = seen_.find(s); it != seen_.end()) return it->second;
    const double v = derivative(s);
    seen_.emplace(s, v);
    return v;
  }

  bool monotone() const { return monotone_; }
  double peak() const { return peak_; }

  // Largest s with D(s) >= target; 0 when the table never reaches target.
  double invert(double target) {
    if (!(peak_ > target)) return 0.0;
    std::size_t last = 0;
    for (std::size_t j = 0; j < d_.size(); ++j) {
      if (d_[j] >= target) last = j;
    }
    double lo = s_[last];
    double f_lo = d_[last] - target;
    double hi, f_hi;
    if (last + 1 < s_.size()) {
      hi = s_[last + 1];
      f_hi = d_[last + 1] - target;
    } else {
      hi = 2.0 * lo;
      f_hi = evaluate(hi) - target;
      while (f_hi >= 0.0) {
        if (hi > 1e15) {
          throw NumericalError("marginal utility stays above " + std::to_string(target) +
                               " up to snr 1e15");
        }
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = evaluate(hi) - target;
      }
    }
    // Tighten with earlier evaluations inside the crossing interval.
    for (auto it = seen_.upper_bound(lo); it != seen_.end() && it->first < hi; ++it) {
      const double f = it->second - target;
      if (f >= 0.0) {
        lo = it->first;
        f_lo = f;
      } else {
        hi = it->first;
        f_hi = f;
        break;
      }
    }
    if (f_lo == 0.0) return lo;
    return solve_decreasing([&](double s) { return evaluate(s) - target; }, lo, hi, f_lo, f_hi,
                            1e-14, 1e-300);
  }

 private:
  void tabulate(int per_decade) {
    s_.assign(1, 0.0);
    for (int k = -3 * per_decade; k <= 4 * per_decade; ++k) {
      s_.push_back(std::pow(10.0, static_cast<double>(k) / per_decade));
    }
    d_.assign(s_.size(), 0.0);
    detail::parallel_for(s_.size(), [&](std::size_t j) { d_[j] = derivative(s_[j]); });
    monotone_ = true;
    for (std::size_t j = 1; j < d_.size(); ++j) {
      if (d_[j] > d_[j - 1] + 1e-12) monotone_ = false;
    }
  }

  ChannelMode mode_;
  std::shared_ptr<const Constellation> constellation_;
  const QuadratureRuled& rule_;
  std::vector<double> s_;
  std::vector<double> d_;
  bool monotone_ = true;
  double peak_ = 0.0;
  std::map<double, double> seen_;
};

}  // namespace

ChannelMode parse_channel_mode(std::string_view name) {
  if (name == "cm") return ChannelMode::cm;
  if (name == "bicm") return ChannelMode::bicm;
  if (name == "gaussian") return ChannelMode::gaussian;
  throw InvalidArgument("unknown channel mode '" + std::string(name) + "'");
}

std::string to_string(ChannelMode mode) {
  switch (mode) {
    case ChannelMode::cm: return "cm";
    case ChannelMode::bicm: return "bicm";
    case ChannelMode::gaussian: return "gaussian";
  }
  return "?";
}

void ParallelChannelSet::validate() const {
  if (channels.empty()) throw InvalidArgument("no channels");
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    throw InvalidArgument("power budget must be positive");
  }
  for (std::size_t k = 0; k < channels.size(); ++k) {
    const auto& ch = channels[k];
    if (!(ch.gain > 0.0) || !std::isfinite(ch.gain)) {
      throw InvalidArgument("channel " + std::to_string(k) + " has non-positive gain");
    }
    if (ch.mode != ChannelMode::gaussian && !ch.constellation) {
      throw InvalidArgument("channel " + std::to_string(k) + " has no constellation");
    }
  }
}

double channel_information(const Channel& ch, double power, const QuadratureRuled& rule) {
  const Snr s(ch.gain * power);
  switch (ch.mode) {
    case ChannelMode::cm: return mi_cm(*ch.constellation, s, rule);
    case ChannelMode::bicm: return mi_bicm_direct(*ch.constellation, s, rule);
    case ChannelMode::gaussian: return gaussian_mi(s);
  }
  return 0.0;
}

double marginal_utility(const Channel& ch, double power, const QuadratureRuled& rule) {
  if (!(power >= 0.0)) throw InvalidArgument("power must be non-negative");
  const Snr s(ch.gain * power);
  switch (ch.mode) {
    case ChannelMode::cm: return ch.gain * mmse_cm(*ch.constellation, s, rule);
    case ChannelMode::bicm: return ch.gain * bicm_mi_derivative(*ch.constellation, s, rule);
    case ChannelMode::gaussian: return ch.gain * gaussian_mmse(s);
  }
  return 0.0;
}

Allocation allocate(const ParallelChannelSet& set, double tol, const QuadratureRuled& rule) {
  set.validate();
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  const std::size_t K = set.channels.size();
  const double budget = set.budget;

  // One table per distinct (mode, constellation).
  std::map<std::pair<ChannelMode, const Constellation*>, std::shared_ptr<UtilityModel>> cache;
  std::vector<std::shared_ptr<UtilityModel>> models(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& ch = set.channels[k];
    const Constellation* key = ch.mode == ChannelMode::gaussian ? nullptr : ch.constellation.get();
    auto& slot = cache[{ch.mode, key}];
    if (!slot) slot = std::make_shared<UtilityModel>(ch.mode, ch.constellation, rule);
    models[k] = slot;
  }

  auto powers_at = [&](double lambda) {
    std::vector<double> p(K);
    for (std::size_t k = 0; k < K; ++k) {
      const double g = set.channels[k].gain;
      p[k] = models[k]->invert(lambda / g) / g;
    }
    return p;
  };
  auto excess = [&](double lambda) {
    const auto p = powers_at(lambda);
    return std::accumulate(p.begin(), p.end(), 0.0) - budget;
  };

  double top = 0.0;
  double bottom = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    top = std::max(top, set.channels[k].gain * models[k]->peak());
    bottom = std::min(bottom, set.channels[k].gain * models[k]->peak());
  }
  double hi = top * (1.0 + 1e-12);
  double f_hi = excess(hi);
  double lo = 0.5 * top;
  double f_lo = excess(lo);
  for (int halvings = 0; f_lo < 0.0; ++halvings) {
    if (halvings > 200 || !(lo > 0.0)) {
      std::ostringstream os;
      os << "failed to bracket the multiplier: peak marginal utilities span [" << bottom << ", "
         << top << "]";
      throw NumericalError(os.str());
    }
    hi = lo;
    f_hi = f_lo;
    lo *= 0.5;
    f_lo = excess(lo);
  }
  const double lambda = f_lo == 0.0 ? lo
                                    : solve_decreasing(excess, lo, hi, f_lo, f_hi, 1e-15, 0.0);

  Allocation alloc;
  alloc.multiplier = lambda;
  alloc.powers = powers_at(lambda);
  const double total = std::accumulate(alloc.powers.begin(), alloc.powers.end(), 0.0);
  const double gap = budget - total;
  if (std::abs(gap) > 1e-9 * std::max(1.0, budget) || !(total > 0.0)) {
    std::ostringstream os;
    os << "no multiplier meets the budget: total power jumps near lambda=" << lambda
       << " (allocated " << total << " of " << budget << "); a channel utility is not concave";
    throw NumericalError(os.str());
  }
  for (auto& p : alloc.powers) p += gap * p / total;

  alloc.kkt_residual = 0.0;
  alloc.objective = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& ch = set.channels[k];
    const double u = marginal_utility(ch, alloc.powers[k], rule);
    const double r = alloc.powers[k] > 0.0 ? std::abs(u - lambda) : std::max(0.0, u - lambda);
    alloc.kkt_residual = std::max(alloc.kkt_residual, r);
    alloc.objective += channel_information(ch, alloc.powers[k], rule);
    alloc.monotone = alloc.monotone && models[k]->monotone();
  }
  if (alloc.kkt_residual > tol) {
    std::ostringstream os;
    os << "KKT residual " << alloc.kkt_residual << " exceeds tolerance " << tol;
    throw NumericalError(os.str());
  }
  if (!alloc.monotone) {
    const double gain = perturbation_gain(set, alloc, 0.01, rule);
    if (gain > 1e-9) {
      std::ostringstream os;
      os << "allocation is not locally optimal: a 1% power shift gains " << gain << " nats";
      throw NumericalError(os.str());
    }
  }
  return alloc;
}

double perturbation_gain(const ParallelChannelSet& set, const Allocation& alloc,
                         double fraction, const QuadratureRuled& rule) {
  const std::size_t K = set.channels.size();
  const double step = fraction * set.budget;
  std::vector<double> base(K);
  for (std::size_t k = 0; k < K; ++k) {
    base[k] = channel_information(set.channels[k], alloc.powers[k], rule);
  }
  double best = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < K; ++k) {
    if (!(alloc.powers[k] > 0.0)) continue;
    for (std::size_t j = 0; j < K; ++j) {
      if (j == k || !(alloc.powers[j] > 0.0)) continue;
      const double delta = std::min(step, alloc.powers[j]);
      const double change =
          channel_information(set.channels[k], alloc.powers[k] + delta, rule) - base[k] +
          channel_information(set.channels[j], alloc.powers[j] - delta, rule) - base[j];
      best = any ? std::max(best, change) : change;
      any = true;
    }
  }
  return best;
}

Allocation gaussian_reference_allocate(std::span<const double> gains, double budget) {
  if (gains.empty()) throw InvalidArgument("no channels");
  if (!(budget > 0.0)) throw InvalidArgument("power budget must be positive");
  for (double g : gains) {
    if (!(g > 0.0)) throw InvalidArgument("gains must be positive");
  }
  std::vector<std::size_t> order(gains.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return gains[a] > gains[b]; });

  // Water level with the `active` strongest channels open.
  double inverse_sum = 0.0;
  double level = 0.0;
  for (std::size_t active = 1; active <= order.size(); ++active) {
    inverse_sum += 1.0 / gains[order[active - 1]];
    level = (budget + inverse_sum) / static_cast<double>(active);
    if (active == order.size() || level <= 1.0 / gains[order[active]]) break;
  }

  Allocation alloc;
  alloc.multiplier = 1.0 / level;
  alloc.powers.resize(gains.size());
  for (std::size_t k = 0; k < gains.size(); ++k) {
    const double p = std::max(0.0, level - 1.0 / gains[k]);
    alloc.powers[k] = p;
    alloc.objective += std::log1p(gains[k] * p);
    const double u = gains[k] / (1.0 + gains[k] * p);
    const double r =
        p > 0.0 ? std::abs(u - alloc.multiplier) : std::max(0.0, u - alloc.multiplier);
    alloc.kkt_residual = std::max(alloc.kkt_residual, r);
  }
  return alloc;
}

ParallelChannelSet load_problem(std::istream& in, const std::string& base_dir) {
  ParallelChannelSet set;
  bool have_budget = false;
  std::map<std::string, std::shared_ptr<const Constellation>> loaded;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first)) continue;
    std::string extra;
    if (!have_budget) {
      double budget = 0.0;
      if (first != "budget" || !(fields >> budget) || (fields >> extra)) {
        throw ParseError(lineno, "expected 'budget <P>' header");
      }
      if (!(budget > 0.0)) throw ParseError(lineno, "budget must be positive");
      set.budget = budget;
      have_budget = true;
      continue;
    }
    Channel ch;
    std::string id, mode;
    try {
      std::size_t used = 0;
      ch.gain = std::stod(first, &used);
      if (used != first.size()) throw std::invalid_argument(first);
    } catch (const std::exception&) {
      throw ParseError(lineno, "invalid gain '" + first + "'");
    }
    if (!(ch.gain > 0.0)) throw ParseError(lineno, "gain must be positive");
    if (!(fields >> id >> mode) || (fields >> extra)) {
      throw ParseError(lineno, "expected '<gain> <constellation> <cm|bicm|gaussian>'");
    }
    try {
      ch.mode = parse_channel_mode(mode);
    } catch (const InvalidArgument& e) {
      throw ParseError(lineno, e.what());
    }
    ch.name = id;
    if (ch.mode != ChannelMode::gaussian) {
      auto& c = loaded[id];
      if (!c) {
        try {
          if (id.find(',') != std::string::npos) {
            c = std::make_shared<const Constellation>(build_constellation(id));
          } else {
            std::filesystem::path path(id);
            if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
            c = std::make_shared<const Constellation>(load_constellation_file(path.string()));
          }
        } catch (const ParseError& e) {
          throw ParseError(lineno, "constellation '" + id + "': " + e.what());
        } catch (const InvalidArgument& e) {
          throw ParseError(lineno, e.what());
        }
      }
      ch.constellation = c;
    }
    set.channels.push_back(std::move(ch));
  }
  if (!have_budget) throw ParseError(lineno, "missing 'budget <P>' header");
  if (set.channels.empty()) throw ParseError(lineno, "no channels");
  return set;
}

ParallelChannelSet load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open problem file '" + path + "'");
  return load_problem(in, std::filesystem::path(path).parent_path().string());
}

}  // namespace bicm
