#pragma once

#include <cmath>
#include <cstdint>

namespace ips {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// xoshiro256++ with key-derived seeding. Streams are addressed by an
// arbitrary tuple of 64-bit words (seed, stream id, purpose tag, site
// coordinates, ...), so independent replications and lazily sampled
// per-site timelines are reproducible without coordination.
class Rng {
 public:
  Rng() { seed_absorb(0); finalize(); }

  template <class... Key>
  static Rng keyed(Key... key) {
    Rng r;
    r.st_ = 0x6a09e667f3bcc909ull;
    (r.seed_absorb(static_cast<std::uint64_t>(key)), ...);
    r.finalize();
    return r;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform on [0, 1)
  double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // strictly positive Exp(rate) variate
  double exponential(double rate) {
    double u;
    do {
      u = u01();
    } while (u == 0.0);
    return -std::log(u) / rate;
  }

  // unbiased integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = -n % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  void seed_absorb(std::uint64_t k) {
    st_ ^= k;
    st_ = (st_ ^ (st_ >> 30)) * 0xbf58476d1ce4e5b9ull;
    st_ = (st_ ^ (st_ >> 27)) * 0x94d049bb133111ebull;
    st_ ^= st_ >> 31;
  }

  void finalize() {
    for (auto& w : s_) w = splitmix64_next(st_);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t st_ = 0x6a09e667f3bcc909ull;
  std::uint64_t s_[4] = {};
};

// Stable seed derivation for sub-estimators so that different operations
// sharing one user seed do not reuse streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t purpose) {
  std::uint64_t st = seed ^ (0x517cc1b727220a95ull + purpose);
  splitmix64_next(st);
  return splitmix64_next(st);
}

}  // namespace ips
