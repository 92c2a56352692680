#pragma once

#include <cstdint>
#include <vector>

#include "ips/estimate.hpp"
#include "ips/graphical.hpp"
#include "ips/lattice.hpp"
#include "ips/rates.hpp"
#include "ips/timeline.hpp"

namespace ips {

// Space-time slab E x (t_lo, t_hi] of revealed Poisson points; sites is a
// bitmap over Lambda_m. Membership is a function of (site, time) only.
struct Strip {
  double t_lo = 0;
  double t_hi = 0;
  std::vector<std::uint8_t> sites;
};

struct ExplorationRecord {
  Box box;
  double S = 0;
  double horizon = 0;
  int phase1_outcome = 0;   // auxiliary value at the origin at time T
  bool phase2_ran = false;  // triggered exactly when the outcome is 1
  std::vector<Strip> phase1;  // absolute times, within (S, T]
  std::vector<Strip> phase2;  // within (0, T]

  bool in_Z(const Site& x, double t) const;
  // Total space-time area of Z_infty, overlaps between phases counted once.
  double z_area() const;
};

struct ExploreResult {
  ExplorationRecord record;
  int f = 0;  // X_T^m(0), determined from revealed atoms only
};

// Two-phase exploration: phase 1 runs the auxiliary dynamics from time S
// with all-ones start, revealing atoms one at a time only at sites whose
// R-neighborhood is not all zero; if the auxiliary origin is still occupied
// at T, phase 2 re-explores from time 0 and determines f exactly. When
// phase 1 already ends at 0, monotone domination forces f = 0.
ExploreResult explore_once(const Timeline& tl, double S, const RateSpec& spec, double h);

// f from the exploration equals the origin indicator of the full evolution.
bool check_determinism(const Timeline& tl, double S, const RateSpec& spec, double h);

// Monte Carlo probability that (x, t) lies in a revealed strip, over fresh
// (timeline, S) pairs with S ~ U[0, T].
Estimate revelation_probability(const Site& x, double t, const RateSpec& spec, double h,
                                double T, int m, std::uint64_t reps, std::uint64_t seed,
                                int threads = 1);

struct OsssCell {
  Site x;
  double t = 0;
  double weight = 0;     // trapezoid weight in t
  double p_reveal = 0;   // P((x,t) in Z_infty)
  double p_reveal_se = 0;
  double infl = 0;       // E |f(P + delta_z) - f(P)| with (u, w) sampled
  double infl_se = 0;
};

struct OsssEstimate {
  Estimate rhs;       // 2 * integral of p_reveal * infl d lambda_{h,m}^T
  Estimate theta;     // free by-product: the f-indicator across reveal reps
  std::vector<OsssCell> cells;
};

// Assembles the variance bound numerically: exact sum over x in Lambda_m,
// trapezoid in t, (u, w) sampled per cell; the revelation factor shares one
// replication set across all cells and its error is propagated
// per-replication.
OsssEstimate osss_rhs(const RateSpec& spec, double h, double T, int m, int t_points,
                      std::uint64_t reveal_reps, std::uint64_t infl_reps, std::uint64_t seed,
                      int threads = 1);

}  // namespace ips
