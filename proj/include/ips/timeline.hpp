#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "ips/lattice.hpp"

namespace ips {

// One marked Poisson point: an update opportunity at (site, time) with the
// update selector u in [0, M] and the mark coupler v in [0, 1]. The A/B mark
// is not stored; it is resolved against h at application time so one sampled
// timeline serves a whole h-sweep with the monotone coupling.
struct Atom {
  Site site;
  double time = 0;
  double u = 0;
  double v = 0;
};

// How sites outside the sampled box behave:
//   truncated - no atoms outside the box (the boxed process P_m^T)
//   strict    - reading outside the box is an error (cone escape guard)
//   lazy      - per-site timelines are sampled on demand from streams keyed
//               by (seed, stream, site), so the box extends deterministically
enum class Extent { truncated, strict, lazy };

struct AtomKey {
  std::int32_t site_idx = 0;
  std::int32_t atom_idx = 0;
};

class Timeline {
 public:
  // Independent rate-M Poisson clocks per site on (0, T]; u ~ U[0,M],
  // v ~ U[0,1] per atom. Per-site streams are keyed by (seed, stream, site),
  // so timelines on nested boxes with equal keys agree on shared sites and a
  // longer horizon extends a shorter one atom-for-atom.
  static Timeline sample(const Box& box, double T, double M, std::uint64_t seed,
                         std::uint64_t stream, Extent extent = Extent::truncated);
  static Timeline from_atoms(const Box& box, double T, double M, std::vector<Atom> atoms,
                             Extent extent = Extent::truncated);
  static Timeline empty(const Box& box, double T, double M) {
    return from_atoms(box, T, M, {});
  }

  const Box& box() const { return box_; }
  double horizon() const { return horizon_; }
  double rate() const { return rate_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  Extent extent() const { return extent_; }

  const std::vector<Atom>& atoms_in_box(std::int32_t site_idx) const {
    return per_site_[static_cast<std::size_t>(site_idx)];
  }
  // Extent semantics apply for sites outside the box.
  const std::vector<Atom>& atoms_at(const Site& s) const;

  // In-box atoms sorted by (time, site index, atom index).
  const std::vector<AtomKey>& order() const { return order_; }
  const Atom& atom(const AtomKey& k) const {
    return per_site_[static_cast<std::size_t>(k.site_idx)][static_cast<std::size_t>(k.atom_idx)];
  }
  std::size_t total_in_box() const { return order_.size(); }
  std::vector<Atom> all_atoms_in_box() const;

  // Copy with one extra atom; throws on an exact (site, time) tie.
  Timeline with_atom(const Atom& a) const;

  // Flat record stream (site, time, u, v) in event order; decimal output
  // round-trips the exact doubles.
  void dump(std::ostream& os) const;
  static Timeline load(std::istream& is);

 private:
  Timeline() = default;
  void rebuild_order();

  Box box_;
  double horizon_ = 0;
  double rate_ = 0;
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  Extent extent_ = Extent::truncated;
  std::vector<std::vector<Atom>> per_site_;
  std::vector<AtomKey> order_;
  // Lazy memo; not synchronized. Keep lazy timelines private to one thread
  // and give concurrent replications their own instances.
  mutable std::map<Site, std::vector<Atom>> outside_;
};

std::vector<Atom> sample_site_atoms(const Site& s, double T, double M,
                                    std::uint64_t seed, std::uint64_t stream);

}  // namespace ips
