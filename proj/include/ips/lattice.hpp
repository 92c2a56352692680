#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace ips {

inline constexpr int kMaxDim = 4;

// Lattice point in Z^d. Coordinates beyond the active dimension stay 0 so
// that sites are comparable and hashable without carrying d around.
struct Site {
  std::array<std::int32_t, kMaxDim> c{};

  friend bool operator==(const Site&, const Site&) = default;
  friend auto operator<=>(const Site&, const Site&) = default;
};

inline Site site1(std::int32_t x) { return Site{{x, 0, 0, 0}}; }
inline Site site2(std::int32_t x, std::int32_t y) { return Site{{x, y, 0, 0}}; }

inline Site operator+(const Site& a, const Site& b) {
  Site r;
  for (int i = 0; i < kMaxDim; ++i) r.c[i] = a.c[i] + b.c[i];
  return r;
}

inline Site operator-(const Site& a, const Site& b) {
  Site r;
  for (int i = 0; i < kMaxDim; ++i) r.c[i] = a.c[i] - b.c[i];
  return r;
}

inline int linf_norm(const Site& s) {
  int m = 0;
  for (int i = 0; i < kMaxDim; ++i) m = std::max(m, std::abs(s.c[i]));
  return m;
}

struct SiteHash {
  std::size_t operator()(const Site& s) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (int i = 0; i < kMaxDim; ++i) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.c[i])) +
           0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

// Centered box Lambda_m = {-m,...,m}^d.
struct Box {
  int d = 1;
  int m = 0;

  Box() = default;
  Box(int d_, int m_) : d(d_), m(m_) {
    if (d < 1 || d > kMaxDim || m < 0)
      throw std::invalid_argument("Box: need 1 <= d <= 4 and m >= 0");
  }

  int side() const { return 2 * m + 1; }

  std::int64_t size() const {
    std::int64_t n = 1;
    for (int i = 0; i < d; ++i) n *= side();
    return n;
  }

  bool contains(const Site& s) const {
    for (int i = 0; i < d; ++i)
      if (s.c[i] < -m || s.c[i] > m) return false;
    for (int i = d; i < kMaxDim; ++i)
      if (s.c[i] != 0) return false;
    return true;
  }

  // Lexicographic linear index (first coordinate varies slowest).
  std::int32_t index(const Site& s) const {
    std::int64_t idx = 0;
    for (int i = 0; i < d; ++i) idx = idx * side() + (s.c[i] + m);
    return static_cast<std::int32_t>(idx);
  }

  Site site(std::int64_t idx) const {
    Site s;
    for (int i = d - 1; i >= 0; --i) {
      s.c[i] = static_cast<std::int32_t>(idx % side()) - m;
      idx /= side();
    }
    return s;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

// Offsets of Lambda_R in lexicographic coordinate order; entry k of the
// result is bit k in rate-table masks.
inline std::vector<Site> ball_offsets(int d, int R) {
  if (d < 1 || d > kMaxDim || R < 0)
    throw std::invalid_argument("ball_offsets: need 1 <= d <= 4 and R >= 0");
  const Box ball(d, R);
  std::vector<Site> out;
  out.reserve(static_cast<std::size_t>(ball.size()));
  for (std::int64_t i = 0; i < ball.size(); ++i) out.push_back(ball.site(i));
  return out;
}

}  // namespace ips
