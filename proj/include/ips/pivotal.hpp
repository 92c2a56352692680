#pragma once

#include <cstdint>

#include "ips/estimate.hpp"
#include "ips/graphical.hpp"
#include "ips/lattice.hpp"
#include "ips/rates.hpp"
#include "ips/timeline.hpp"

namespace ips {

// Candidate point (x, t, u) tested for T-pivotality on the truncated
// dynamics started from all ones on Lambda_m.
struct PivotalQuery {
  Site x;
  double t = 0;
  double u = 0;
  double T = 0;
  int m = 0;
  double h = 0;
};

// (a) the A-atom injected at (x, t, u) leaves X_t(x) = 1, and
// (b) forcing the value at (x, t) flips the origin's value at T:
// ^{x,t,0}X_T(0) = 0 while ^{x,t,1}X_T(0) = 1. Both conditions are read off
// the augmented timeline; the forcings override the injected atom, so (b)
// matches the unaugmented evaluation.
bool is_pivotal(const Timeline& tl, const PivotalQuery& q, const RateSpec& spec);

// Monte Carlo pivotal probability over fresh timelines. A query with
// t > T is reported as a degenerate zero estimate (precondition violation).
Estimate pivotal_probability(const PivotalQuery& q, const RateSpec& spec, std::uint64_t reps,
                             std::uint64_t seed, int threads = 1);

// Russo derivative estimator: (x, t, u) sampled uniformly on
// Lambda_m x (0,T] x [0,M], pivotal indicator on an independent timeline,
// scaled by minus the total mass M |Lambda_m| T.
Estimate russo_derivative_mc(const RateSpec& spec, int m, double T, double h,
                             std::uint64_t samples, std::uint64_t seed, int threads = 1,
                             std::uint64_t reps_per_sample = 1);

struct InfluencePair {
  Estimate I;  // add-one influence integral over marked points
  Estimate J;  // pivotality integral over markless points
};

// Both integrals estimated on shared per-sample timelines; masses
// M |Lambda_m| T on each side.
InfluencePair integrals_I_and_J(const RateSpec& spec, int m, double T, double h,
                                std::uint64_t samples, std::uint64_t seed, int threads = 1);

}  // namespace ips
