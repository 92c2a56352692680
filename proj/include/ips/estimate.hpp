#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace ips {

// Monte Carlo point estimate with uncertainty and seed provenance.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  double lo = 0.0;  // 95% interval
  double hi = 0.0;
  std::uint64_t n = 0;
  std::string method;
  std::uint64_t seed = 0;
};

inline void wilson_interval(std::uint64_t hits, std::uint64_t n, double z,
                            double* lo, double* hi) {
  if (n == 0) {
    *lo = 0.0;
    *hi = 1.0;
    return;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  const double nn = static_cast<double>(n);
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  *lo = std::max(0.0, center - half);
  *hi = std::min(1.0, center + half);
}

inline Estimate bernoulli_estimate(std::uint64_t hits, std::uint64_t n,
                                   std::uint64_t seed) {
  Estimate e;
  e.n = n;
  e.seed = seed;
  e.method = "wilson";
  if (n > 0) {
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    e.mean = p;
    e.se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  }
  wilson_interval(hits, n, 1.959963984540054, &e.lo, &e.hi);
  return e;
}

inline Estimate mean_estimate(double sum, double sumsq, std::uint64_t n,
                              std::uint64_t seed) {
  Estimate e;
  e.n = n;
  e.seed = seed;
  e.method = "normal";
  if (n > 0) {
    const double nn = static_cast<double>(n);
    e.mean = sum / nn;
    const double var = std::max(0.0, (sumsq - sum * sum / nn) / std::max(1.0, nn - 1.0));
    e.se = std::sqrt(var / nn);
    e.lo = e.mean - 1.959963984540054 * e.se;
    e.hi = e.mean + 1.959963984540054 * e.se;
  }
  return e;
}

// Mergeable accumulators; merging in a fixed block order keeps results
// independent of the worker-thread count.
struct CountAcc {
  std::uint64_t n = 0;
  std::uint64_t hits = 0;
  void add(bool b) {
    ++n;
    hits += b ? 1u : 0u;
  }
  void merge(const CountAcc& o) {
    n += o.n;
    hits += o.hits;
  }
  Estimate estimate(std::uint64_t seed) const { return bernoulli_estimate(hits, n, seed); }
};

struct MeanAcc {
  std::uint64_t n = 0;
  double sum = 0.0;
  double sumsq = 0.0;
  void add(double x) {
    ++n;
    sum += x;
    sumsq += x * x;
  }
  void merge(const MeanAcc& o) {
    n += o.n;
    sum += o.sum;
    sumsq += o.sumsq;
  }
  Estimate estimate(std::uint64_t seed) const { return mean_estimate(sum, sumsq, n, seed); }
};

}  // namespace ips
