#include "bicm/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "bicm/error.hpp"
#include "parallel.hpp"

namespace bicm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Welford accumulator; `merge` is Chan's pairwise update.
struct Moments {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double delta = o.mean - mean;
    mean += delta * static_cast<double>(o.n) / total;
    m2 += o.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }
};

// Draws (index, z) pairs batch by batch and feeds sample(index, y) into
// per-batch moments; y = sqrt(snr) a[index] + z.
template <typename Sample>
McEstimate simulate(const PointVector& a, Snr snr, std::int64_t samples, std::uint64_t seed,
                    Sample&& sample) {
  if (a.size() == 0) throw InvalidArgument("empty point set");
  if (samples < 1) throw InvalidArgument("Monte Carlo needs at least one sample");
  const double amplitude = std::sqrt(snr.linear());
  const auto batches = static_cast<std::size_t>((samples + kMcBatchSize - 1) / kMcBatchSize);
  std::vector<Moments> partial(batches);
  detail::parallel_for(batches, [&](std::size_t b) {
    const std::int64_t begin = static_cast<std::int64_t>(b) * kMcBatchSize;
    const std::int64_t count = std::min(kMcBatchSize, samples - begin);
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(b)));
    std::uniform_int_distribution<Eigen::Index> pick(0, a.size() - 1);
    std::normal_distribution<double> noise(0.0, std::sqrt(0.5));
    Moments acc;
    for (std::int64_t s = 0; s < count; ++s) {
      const Eigen::Index k = pick(rng);
      const double re = noise(rng);
      const double im = noise(rng);
      const Complex y = amplitude * a[k] + Complex(re, im);
      acc.add(sample(k, y));
    }
    partial[b] = acc;
  });
  Moments total;
  for (const auto& p : partial) total.merge(p);
  McEstimate est;
  est.mean = total.mean;
  est.samples = total.n;
  est.seed = seed;
  est.std_error = total.n > 1 ? std::sqrt(total.m2 / static_cast<double>(total.n - 1) /
                                          static_cast<double>(total.n))
                              : 0.0;
  return est;
}

// -|y - sqrt(snr) a_j|^2 for every j; returns the maximum.
double exponents(const PointVector& a, double amplitude, Complex y, std::vector<double>& d) {
  double dmax = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    d[j] = -std::norm(y - amplitude * a[j]);
    dmax = std::max(dmax, d[j]);
  }
  return dmax;
}

}  // namespace

McEstimate mc_mmse(const PointVector& a, Snr snr, std::int64_t samples, std::uint64_t seed) {
  const double amplitude = std::sqrt(snr.linear());
  return simulate(a, snr, samples, seed, [&](Eigen::Index k, Complex y) {
    thread_local std::vector<double> d;
    d.resize(static_cast<std::size_t>(a.size()));
    const double dmax = exponents(a, amplitude, y, d);
    Complex num = 0.0;
    double den = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      const double w = std::exp(d[j] - dmax);
      num += w * a[j];
      den += w;
    }
    return std::norm(a[k] - num / den);
  });
}

McEstimate mc_mi_cm(const PointVector& a, Snr snr, std::int64_t samples, std::uint64_t seed) {
  const double amplitude = std::sqrt(snr.linear());
  const double size = static_cast<double>(a.size());
  return simulate(a, snr, samples, seed, [&](Eigen::Index k, Complex y) {
    thread_local std::vector<double> d;
    d.resize(static_cast<std::size_t>(a.size()));
    const double dmax = exponents(a, amplitude, y, d);
    double sum = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) sum += std::exp(d[j] - dmax);
    return (d[k] - dmax) - std::log(sum / size);
  });
}

McEstimate mc_mi_bicm(const Constellation& c, Snr snr, std::int64_t samples,
                      std::uint64_t seed) {
  const PointVector& a = c.points();
  const double amplitude = std::sqrt(snr.linear());
  return simulate(a, snr, samples, seed, [&](Eigen::Index k, Complex y) {
    thread_local std::vector<double> d;
    d.resize(static_cast<std::size_t>(a.size()));
    const double dmax = exponents(a, amplitude, y, d);
    double all = 0.0;
    for (double v : d) all += std::exp(v - dmax);
    // each subset sum is rescaled by its own maximum so it cannot underflow
    double acc = 0.0;
    for (int i = 1; i <= c.bits(); ++i) {
      const int b = c.bit(static_cast<int>(k), i);
      double smax = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < c.size(); ++j) {
        if (c.bit(j, i) == b) smax = std::max(smax, d[j]);
      }
      double same = 0.0;
      for (int j = 0; j < c.size(); ++j) {
        if (c.bit(j, i) == b) same += std::exp(d[j] - smax);
      }
      acc += (smax - dmax) + std::log(2.0 * same / all);
    }
    return acc;
  });
}

}  // namespace bicm
