#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ips/lattice.hpp"
#include "ips/rates.hpp"
#include "ips/timeline.hpp"

namespace ips {

enum class Mark : std::uint8_t { A, B };

// B exactly when v < h, so for a fixed atom the mark flips from A to B once
// as h grows: the monotone coupling across the perturbation strength.
inline Mark classify_mark(double v, double h) { return v < h ? Mark::B : Mark::A; }

// Configuration on Lambda_m; sites outside the box read as 0.
struct BoxState {
  Box box;
  std::vector<std::uint8_t> bits;

  static BoxState all_ones(const Box& b) { return {b, std::vector<std::uint8_t>(static_cast<std::size_t>(b.size()), 1)}; }
  static BoxState all_zeros(const Box& b) { return {b, std::vector<std::uint8_t>(static_cast<std::size_t>(b.size()), 0)}; }

  int get(const Site& s) const {
    return box.contains(s) ? bits[static_cast<std::size_t>(box.index(s))] : 0;
  }
  int get_idx(std::int32_t i) const { return bits[static_cast<std::size_t>(i)]; }
  void set_idx(std::int32_t i, int v) { bits[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v); }

  friend bool operator==(const BoxState&, const BoxState&) = default;
};

// Override of the state at one space-time point; at an equal time the atom
// update applies first and the forcing second, so the value AT time t is the
// forced one.
struct Forcing {
  Site site;
  double time = 0;
  int value = 0;
};

struct ChangeEvent {
  double time = 0;
  std::int32_t site_idx = 0;
  std::uint8_t value = 0;
};

// Piecewise-constant path record: initial state plus the sparse list of
// actual changes in application order.
struct Trajectory {
  Box box;
  double horizon = 0;
  BoxState initial;
  BoxState final_state;
  std::vector<ChangeEvent> events;

  int value_at(const Site& s, double t) const;
  BoxState state_at(double t) const;
  // Values at several query times in one pass; times must be ascending.
  std::vector<int> values_at(const Site& s, std::span<const double> times) const;
  double occupation(const Site& s, double T) const;
  std::vector<double> occupations(const Site& s, std::span<const double> times) const;
};

// Neighborhood geometry for one (box, offsets) pair: box indices of
// x + Lambda_R per site, -1 where the neighbor falls outside (reads 0).
class NeighborTable {
 public:
  NeighborTable(const Box& box, const std::vector<Site>& offsets);
  std::uint32_t local_mask(const BoxState& st, std::int32_t site_idx) const {
    const std::int32_t* row = &nb_[static_cast<std::size_t>(site_idx) * static_cast<std::size_t>(k_)];
    std::uint32_t m = 0;
    for (int b = 0; b < k_; ++b) {
      const std::int32_t j = row[b];
      if (j >= 0 && st.get_idx(j)) m |= 1u << b;
    }
    return m;
  }
  int fanout() const { return k_; }
  const std::int32_t* row(std::int32_t site_idx) const {
    return &nb_[static_cast<std::size_t>(site_idx) * static_cast<std::size_t>(k_)];
  }

 private:
  std::vector<std::int32_t> nb_;
  int k_ = 0;
};

// Single update step of the graphical construction at one atom.
BoxState apply_atom(const BoxState& state, const RateSpec& spec, const RateConstants& k,
                    const Atom& atom, double h);

// Caches rate constants and the neighbor table for repeated evolutions on
// one box.
class Evolver {
 public:
  Evolver(const Box& box, const RateSpec& spec);

  // Processes atoms with t0 < time <= T in chronological order, then applies
  // forcings at their times (atom first on ties). T < 0 means the timeline
  // horizon. Atoms are read only inside the box.
  Trajectory run(const BoxState& init, const Timeline& tl, double h,
                 std::span<const Forcing> forcings = {}, double T = -1.0,
                 double t0 = 0.0) const;

  const RateConstants& consts() const { return k_; }
  const Box& box() const { return box_; }

 private:
  Box box_;
  const RateSpec* spec_;
  RateConstants k_;
  NeighborTable nb_;
};

inline Trajectory evolve(const BoxState& init, const Timeline& tl, const RateSpec& spec,
                         double h, std::span<const Forcing> forcings = {}, double T = -1.0,
                         double t0 = 0.0) {
  return Evolver(tl.box(), spec).run(init, tl, h, forcings, T, t0);
}

inline double occupation_time(const Trajectory& traj, const Site& s, double T) {
  return traj.occupation(s, T);
}

// Sitewise a <= b at every time in [from, horizon]; boxes may differ (reads
// outside a box are 0).
bool pathwise_leq(const Trajectory& lo, const Trajectory& hi, double from = 0.0);

}  // namespace ips
