#include "ips/graphical.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

namespace ips {

int Trajectory::value_at(const Site& s, double t) const {
  if (!box.contains(s)) return 0;
  const std::int32_t idx = box.index(s);
  int v = initial.get_idx(idx);
  for (const ChangeEvent& e : events) {
    if (e.time > t) break;
    if (e.site_idx == idx) v = e.value;
  }
  return v;
}

BoxState Trajectory::state_at(double t) const {
  BoxState st = initial;
  for (const ChangeEvent& e : events) {
    if (e.time > t) break;
    st.set_idx(e.site_idx, e.value);
  }
  return st;
}

std::vector<int> Trajectory::values_at(const Site& s, std::span<const double> times) const {
  std::vector<int> out;
  out.reserve(times.size());
  if (!box.contains(s)) {
    out.assign(times.size(), 0);
    return out;
  }
  const std::int32_t idx = box.index(s);
  int v = initial.get_idx(idx);
  std::size_t e = 0;
  for (double t : times) {
    while (e < events.size() && events[e].time <= t) {
      if (events[e].site_idx == idx) v = events[e].value;
      ++e;
    }
    out.push_back(v);
  }
  return out;
}

double Trajectory::occupation(const Site& s, double T) const {
  const std::vector<double> one{T};
  return occupations(s, one)[0];
}

std::vector<double> Trajectory::occupations(const Site& s, std::span<const double> times) const {
  std::vector<double> out;
  out.reserve(times.size());
  if (!box.contains(s)) {
    out.assign(times.size(), 0.0);
    return out;
  }
  const std::int32_t idx = box.index(s);
  int v = initial.get_idx(idx);
  double acc = 0, last = 0;
  std::size_t e = 0;
  for (double t : times) {
    while (e < events.size() && events[e].time <= t) {
      if (events[e].site_idx == idx) {
        if (v == 1) acc += events[e].time - last;
        v = events[e].value;
        last = events[e].time;
      }
      ++e;
    }
    out.push_back(v == 1 ? acc + (t - last) : acc);
  }
  return out;
}

NeighborTable::NeighborTable(const Box& box, const std::vector<Site>& offsets)
    : k_(static_cast<int>(offsets.size())) {
  nb_.resize(static_cast<std::size_t>(box.size()) * static_cast<std::size_t>(k_));
  for (std::int64_t i = 0; i < box.size(); ++i) {
    const Site x = box.site(i);
    for (int b = 0; b < k_; ++b) {
      const Site y = x + offsets[static_cast<std::size_t>(b)];
      nb_[static_cast<std::size_t>(i) * static_cast<std::size_t>(k_) + static_cast<std::size_t>(b)] =
          box.contains(y) ? box.index(y) : -1;
    }
  }
}

namespace {

inline int atom_update(int current, double u, double c0v, double c1v, double M) {
  if (u < c0v) return 0;
  if (u < M - c1v) return current;
  return 1;
}

}  // namespace

BoxState apply_atom(const BoxState& state, const RateSpec& spec, const RateConstants& k,
                    const Atom& atom, double h) {
  if (!state.box.contains(atom.site))
    throw std::invalid_argument("apply_atom: site outside box");
  BoxState out = state;
  const std::int32_t idx = state.box.index(atom.site);
  if (classify_mark(atom.v, h) == Mark::B) {
    out.set_idx(idx, 0);
    return out;
  }
  NeighborTable nb(state.box, spec.site_order);
  const std::uint32_t mask = nb.local_mask(state, idx);
  out.set_idx(idx, atom_update(state.get_idx(idx), atom.u, spec.c0[mask], spec.c1[mask], k.M));
  return out;
}

Evolver::Evolver(const Box& box, const RateSpec& spec)
    : box_(box), spec_(&spec), k_(constants(spec)), nb_(box, spec.site_order) {}

Trajectory Evolver::run(const BoxState& init, const Timeline& tl, double h,
                        std::span<const Forcing> forcings, double T, double t0) const {
  if (!(init.box == box_) || !(tl.box() == box_))
    throw std::invalid_argument("evolve: box mismatch");
  if (T < 0) T = tl.horizon();
  if (T > tl.horizon()) throw std::invalid_argument("evolve: horizon exceeds the timeline");

  std::vector<Forcing> fsorted(forcings.begin(), forcings.end());
  std::stable_sort(fsorted.begin(), fsorted.end(),
                   [](const Forcing& a, const Forcing& b) { return a.time < b.time; });
  {
    std::set<std::pair<std::int32_t, double>> seen;
    for (const Forcing& f : fsorted) {
      if (!box_.contains(f.site)) throw std::invalid_argument("evolve: forcing outside box");
      if (f.time < t0 || f.time > T)
        throw std::invalid_argument("evolve: forcing time outside [t0, T]");
      if (!seen.insert({box_.index(f.site), f.time}).second)
        throw std::invalid_argument("evolve: duplicate forcing (site, time)");
    }
  }

  Trajectory traj;
  traj.box = box_;
  traj.horizon = T;
  traj.initial = init;

  BoxState state = init;
  const auto& order = tl.order();
  std::size_t ai = 0;
  while (ai < order.size() && tl.atom(order[ai]).time <= t0) ++ai;
  std::size_t fi = 0;

  auto apply_one_atom = [&](const Atom& a) {
    const std::int32_t idx = box_.index(a.site);
    const int cur = state.get_idx(idx);
    int next;
    if (classify_mark(a.v, h) == Mark::B) {
      next = 0;
    } else {
      const std::uint32_t mask = nb_.local_mask(state, idx);
      next = atom_update(cur, a.u, spec_->c0[mask], spec_->c1[mask], k_.M);
    }
    if (next != cur) {
      state.set_idx(idx, next);
      traj.events.push_back({a.time, idx, static_cast<std::uint8_t>(next)});
    }
  };

  for (;;) {
    const bool have_atom = ai < order.size() && tl.atom(order[ai]).time <= T;
    const bool have_force = fi < fsorted.size();
    if (!have_atom && !have_force) break;
    const double ta = have_atom ? tl.atom(order[ai]).time : 0;
    const double tf = have_force ? fsorted[fi].time : 0;
    // atom first on equal times so the forcing overrides the update
    if (have_atom && (!have_force || ta <= tf)) {
      apply_one_atom(tl.atom(order[ai]));
      ++ai;
    } else {
      const Forcing& f = fsorted[fi];
      const std::int32_t idx = box_.index(f.site);
      if (state.get_idx(idx) != f.value) {
        state.set_idx(idx, f.value);
        traj.events.push_back({f.time, idx, static_cast<std::uint8_t>(f.value)});
      }
      ++fi;
    }
  }

  traj.final_state = std::move(state);
  return traj;
}

bool pathwise_leq(const Trajectory& lo, const Trajectory& hi, double from) {
  BoxState a = lo.state_at(from);
  BoxState b = hi.state_at(from);
  const Box& big = lo.box.size() >= hi.box.size() ? lo.box : hi.box;
  for (std::int64_t i = 0; i < big.size(); ++i) {
    const Site s = big.site(i);
    if (a.get(s) > b.get(s)) return false;
  }

  std::size_t i = 0, j = 0;
  while (i < lo.events.size() && lo.events[i].time <= from) ++i;
  while (j < hi.events.size() && hi.events[j].time <= from) ++j;

  // Paths are constant between events; apply every event sharing the next
  // time in both streams (shared atoms land at identical doubles), then
  // check only the touched sites.
  std::vector<Site> touched;
  while (i < lo.events.size() || j < hi.events.size()) {
    double t = std::numeric_limits<double>::infinity();
    if (i < lo.events.size()) t = std::min(t, lo.events[i].time);
    if (j < hi.events.size()) t = std::min(t, hi.events[j].time);
    touched.clear();
    while (i < lo.events.size() && lo.events[i].time == t) {
      a.set_idx(lo.events[i].site_idx, lo.events[i].value);
      touched.push_back(lo.box.site(lo.events[i].site_idx));
      ++i;
    }
    while (j < hi.events.size() && hi.events[j].time == t) {
      b.set_idx(hi.events[j].site_idx, hi.events[j].value);
      touched.push_back(hi.box.site(hi.events[j].site_idx));
      ++j;
    }
    for (const Site& s : touched) {
      if (a.get(s) > b.get(s)) return false;
    }
  }
  return true;
}

}  // namespace ips
