#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "ips/estimate.hpp"
#include "ips/graphical.hpp"
#include "ips/lattice.hpp"
#include "ips/rates.hpp"
#include "ips/rng.hpp"
#include "ips/timeline.hpp"

namespace ips {

struct ConeJump {
  double time = 0;     // strictly decreasing across jumps
  Site via;            // cone site whose atom triggered the growth step
  std::vector<Site> added;
};

// Backward influence cone I_t^T: the piecewise-constant, set-valued map
// built from (target, T) down to 0. The set grows exactly at the jump times
// (inclusive), by via + Lambda_R.
struct InfluenceCone {
  Site target;
  double horizon = 0;
  std::vector<ConeJump> jumps;
  std::map<Site, double> entered;  // site -> time it joined (target: horizon)

  bool contains(const Site& x, double t) const {
    const auto it = entered.find(x);
    return it != entered.end() && it->second >= t;
  }
  std::size_t size_at(double t) const {
    std::size_t n = 0;
    for (const auto& [s, at] : entered)
      if (at >= t) ++n;
    return n;
  }
  std::vector<Site> sites_at_zero() const {
    std::vector<Site> out;
    out.reserve(entered.size());
    for (const auto& [s, at] : entered) out.push_back(s);
    return out;
  }
};

// The construction consumes atoms only through their (site, time)
// projection; marks never enter. Extent semantics of the timeline decide
// what happens when the cone leaves the sampled box.
InfluenceCone backward_cone(const Timeline& tl, double T, int R, const Site& target = {},
                            std::size_t max_jumps = 1000000);

// Replays only the atoms whose (site, time) lies inside the cone. Agrees
// with the full evolution at the cone target pathwise, which makes
// single-site queries cheap on large boxes.
Trajectory evolve_in_cone(const BoxState& init, const Timeline& tl, const RateSpec& spec,
                          double h, const InfluenceCone& cone);

struct BrwPopulation {
  std::vector<Site> particles;
  double elapsed = 0;
};

// Continuous-time branching random walk: every particle waits Exp(M), then
// dies and deposits |Lambda_R| offspring on y + Lambda_R. The cap guards the
// e^{M(|Lambda_R|-1)T} mean growth.
BrwPopulation brw_simulate(double M, int R, int d, double T, Rng& rng,
                           std::size_t cap = 10000000);

struct TailRow {
  int distance = 0;
  std::uint64_t hits = 0;
  std::uint64_t reps = 0;
  double p_hat = 0, lo = 0, hi = 0;
};

struct TailProfile {
  std::vector<TailRow> rows;
  double slope = 0;      // fitted log-linear slope over distances with >= 30 hits
  bool slope_ok = false;
  std::uint64_t seed = 0;
};

// Per-distance empirical P(some site at sup-norm distance k from the target
// lies in I_0^T), with Wilson intervals. The cone law does not depend on h.
TailProfile cone_tail_profile(const RateSpec& spec, double T, double h, std::uint64_t reps,
                              std::uint64_t seed, int threads = 1);

}  // namespace ips
