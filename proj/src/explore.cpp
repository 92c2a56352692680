#include "ips/explore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ips/parallel.hpp"
#include "ips/rng.hpp"

namespace ips {

namespace {

constexpr std::uint64_t kRevealTimelines = 0x657870742d746c31ull;
constexpr std::uint64_t kRevealStart = 0x657870742d737432ull;
constexpr std::uint64_t kInflTimelines = 0x6f7373732d746c33ull;
constexpr std::uint64_t kInflMarks = 0x6f7373732d6d6b34ull;

// One exploration pass over (t_start, T]: all-ones start, atoms revealed in
// chronological order restricted to the active set
//   E_n = { x : some y in x + Lambda_R has X(y) != 0 }.
// Sites outside E_n stay 0 regardless of their atoms, so skipping them loses
// nothing; every revealed atom advances T_n by exactly one event.
struct PassResult {
  std::vector<Strip> strips;
  BoxState final_state;
  std::size_t revealed_atoms = 0;
};

class ExplorePass {
 public:
  ExplorePass(const Timeline& tl, const RateSpec& spec, const RateConstants& k, double h)
      : tl_(tl), spec_(spec), k_(k), h_(h), nb_(tl.box(), spec.site_order) {}

  PassResult run(double t_start) const {
    const Box& box = tl_.box();
    const double T = tl_.horizon();
    PassResult out{{}, BoxState::all_ones(box), 0};
    BoxState& state = out.final_state;

    std::vector<std::uint8_t> active(static_cast<std::size_t>(box.size()), 0);
    for (std::int32_t i = 0; i < box.size(); ++i) active[static_cast<std::size_t>(i)] = membership(state, i);

    const auto& order = tl_.order();
    std::size_t ai = 0;
    while (ai < order.size() && tl_.atom(order[ai]).time <= t_start) ++ai;

    double t_n = t_start;
    for (;;) {
      // earliest unrevealed atom inside the active set
      std::size_t next = ai;
      while (next < order.size() && !active[static_cast<std::size_t>(order[next].site_idx)]) ++next;
      if (next >= order.size()) {
        if (t_n < T) out.strips.push_back(make_strip(active, t_n, T));
        break;
      }
      const Atom& a = tl_.atom(order[next]);
      out.strips.push_back(make_strip(active, t_n, a.time));
      ++out.revealed_atoms;

      apply(state, a);
      refresh_active(state, active, box.index(a.site));
      t_n = a.time;
      ai = next + 1;
    }
    return out;
  }

 private:
  std::uint8_t membership(const BoxState& state, std::int32_t site_idx) const {
    const std::int32_t* row = nb_.row(site_idx);
    for (int b = 0; b < nb_.fanout(); ++b) {
      if (row[b] >= 0 && state.get_idx(row[b])) return 1;
    }
    return 0;
  }

  void refresh_active(const BoxState& state, std::vector<std::uint8_t>& active,
                      std::int32_t changed) const {
    // Lambda_R is symmetric, so exactly the Lambda_R-neighbors of the changed
    // site can switch membership.
    const std::int32_t* row = nb_.row(changed);
    for (int b = 0; b < nb_.fanout(); ++b) {
      if (row[b] >= 0) active[static_cast<std::size_t>(row[b])] = membership(state, row[b]);
    }
  }

  void apply(BoxState& state, const Atom& a) const {
    const std::int32_t idx = tl_.box().index(a.site);
    if (classify_mark(a.v, h_) == Mark::B) {
      state.set_idx(idx, 0);
      return;
    }
    const std::uint32_t mask = nb_.local_mask(state, idx);
    const double c0v = spec_.c0[mask], c1v = spec_.c1[mask];
    int next = state.get_idx(idx);
    if (a.u < c0v)
      next = 0;
    else if (a.u >= k_.M - c1v)
      next = 1;
    state.set_idx(idx, next);
  }

  Strip make_strip(const std::vector<std::uint8_t>& active, double lo, double hi) const {
    return Strip{lo, hi, active};
  }

  const Timeline& tl_;
  const RateSpec& spec_;
  const RateConstants& k_;
  double h_;
  NeighborTable nb_;
};

bool strip_hits(const std::vector<Strip>& strips, std::int32_t idx, double t) {
  for (const Strip& s : strips) {
    if (t > s.t_lo && t <= s.t_hi && s.sites[static_cast<std::size_t>(idx)]) return true;
  }
  return false;
}

}  // namespace

bool ExplorationRecord::in_Z(const Site& x, double t) const {
  if (!box.contains(x)) return false;
  const std::int32_t idx = box.index(x);
  return strip_hits(phase1, idx, t) || strip_hits(phase2, idx, t);
}

double ExplorationRecord::z_area() const {
  // Per-site union of time intervals across both phases.
  double area = 0;
  for (std::int32_t i = 0; i < box.size(); ++i) {
    std::vector<std::pair<double, double>> iv;
    for (const auto* phase : {&phase1, &phase2}) {
      for (const Strip& s : *phase) {
        if (s.sites[static_cast<std::size_t>(i)] && s.t_hi > s.t_lo) iv.push_back({s.t_lo, s.t_hi});
      }
    }
    std::sort(iv.begin(), iv.end());
    double cur_lo = 0, cur_hi = -1;
    for (const auto& [lo, hi] : iv) {
      if (lo > cur_hi) {
        if (cur_hi > cur_lo) area += cur_hi - cur_lo;
        cur_lo = lo;
        cur_hi = hi;
      } else {
        cur_hi = std::max(cur_hi, hi);
      }
    }
    if (cur_hi > cur_lo) area += cur_hi - cur_lo;
  }
  return area;
}

ExploreResult explore_once(const Timeline& tl, double S, const RateSpec& spec, double h) {
  const double T = tl.horizon();
  if (S < 0 || S > T) throw std::invalid_argument("explore_once: need S in [0, T]");
  const RateConstants k = constants(spec);
  const ExplorePass pass(tl, spec, k, h);

  ExploreResult res;
  res.record.box = tl.box();
  res.record.S = S;
  res.record.horizon = T;

  const PassResult p1 = pass.run(S);
  res.record.phase1 = p1.strips;
  res.record.phase1_outcome = p1.final_state.get(Site{});

  if (res.record.phase1_outcome == 1) {
    res.record.phase2_ran = true;
    const PassResult p2 = pass.run(0.0);
    res.record.phase2 = p2.strips;
    res.f = p2.final_state.get(Site{});
  } else {
    // X^m <= auxiliary dynamics pathwise, so the origin is 0 at T
    res.f = 0;
  }
  return res;
}

bool check_determinism(const Timeline& tl, double S, const RateSpec& spec, double h) {
  const ExploreResult r = explore_once(tl, S, spec, h);
  const Trajectory full = evolve(BoxState::all_ones(tl.box()), tl, spec, h);
  return r.f == full.final_state.get(Site{});
}

Estimate revelation_probability(const Site& x, double t, const RateSpec& spec, double h,
                                double T, int m, std::uint64_t reps, std::uint64_t seed,
                                int threads) {
  if (reps < 1) throw std::invalid_argument("revelation_probability: need reps >= 1");
  const Box box(spec.d, m);
  const RateConstants k = constants(spec);
  const std::uint64_t tl_seed = mix_seed(seed, kRevealTimelines);
  const std::uint64_t s_seed = mix_seed(seed, kRevealStart);

  CountAcc acc = run_replications<CountAcc>(reps, threads, [&](std::uint64_t rep, CountAcc& p) {
    const Timeline tl = Timeline::sample(box, T, k.M, tl_seed, rep);
    Rng rs = Rng::keyed(s_seed, rep);
    const double S = T * rs.u01();
    const ExploreResult r = explore_once(tl, S, spec, h);
    p.add(r.record.in_Z(x, t));
  });
  Estimate e = acc.estimate(seed);
  e.method = "revelation_mc/wilson";
  return e;
}

OsssEstimate osss_rhs(const RateSpec& spec, double h, double T, int m, int t_points,
                      std::uint64_t reveal_reps, std::uint64_t infl_reps, std::uint64_t seed,
                      int threads) {
  if (t_points < 2) throw std::invalid_argument("osss_rhs: need t_points >= 2");
  if (reveal_reps < 2 || infl_reps < 2)
    throw std::invalid_argument("osss_rhs: need reveal_reps, infl_reps >= 2");
  const Box box(spec.d, m);
  const Evolver ev(box, spec);
  const double M = ev.consts().M;

  // t-grid over (0, T]: a near-zero node stands in for the t -> 0 limit
  // (strips are left-open, so t = 0 itself is never revealed).
  std::vector<double> tgrid;
  tgrid.push_back(1e-9 * T);
  for (int j = 1; j <= t_points; ++j)
    tgrid.push_back(T * static_cast<double>(j) / static_cast<double>(t_points));

  std::vector<OsssCell> cells;
  for (std::int32_t i = 0; i < box.size(); ++i) {
    for (std::size_t j = 0; j < tgrid.size(); ++j) {
      OsssCell c;
      c.x = box.site(i);
      c.t = tgrid[j];
      const double left = j == 0 ? tgrid[0] : tgrid[j - 1];
      const double right = j + 1 < tgrid.size() ? tgrid[j + 1] : tgrid[j];
      c.weight = 0.5 * (right - left) + (j == 0 ? tgrid[0] : 0.0);
      cells.push_back(c);
    }
  }

  // Influence factor per cell, (u, w) sampled per replication.
  const std::uint64_t infl_tl_seed = mix_seed(seed, kInflTimelines);
  const std::uint64_t infl_mk_seed = mix_seed(seed, kInflMarks);
  {
    struct InflPartial {
      std::vector<std::uint64_t> hits;
      std::uint64_t n = 0;
      void merge(const InflPartial& o) {
        if (hits.size() < o.hits.size()) hits.resize(o.hits.size(), 0);
        for (std::size_t i = 0; i < o.hits.size(); ++i) hits[i] += o.hits[i];
        n += o.n;
      }
    };
    InflPartial ip = run_replications<InflPartial>(
        infl_reps, threads, [&](std::uint64_t rep, InflPartial& p) {
          if (p.hits.empty()) p.hits.assign(cells.size(), 0);
          const Timeline tl = Timeline::sample(box, T, M, infl_tl_seed, rep);
          const int f_base =
              ev.run(BoxState::all_ones(box), tl, h).final_state.get(Site{});
          Rng rm = Rng::keyed(infl_mk_seed, rep);
          for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            const double u = M * rm.u01();
            const bool mark_b = rm.u01() < h;
            const Timeline aug =
                tl.with_atom({cells[ci].x, cells[ci].t, u, mark_b ? 0.0 : 1.0});
            const int f_aug =
                ev.run(BoxState::all_ones(box), aug, h).final_state.get(Site{});
            if (f_aug != f_base) ++p.hits[ci];
          }
          ++p.n;
        });
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
      const Estimate e = bernoulli_estimate(ip.hits[ci], ip.n, seed);
      cells[ci].infl = e.mean;
      cells[ci].infl_se = e.se;
    }
  }

  // Revelation factor: one replication set shared by every cell; the linear
  // functional v_r = 2M sum_cells w * infl * 1{revealed in rep r} carries the
  // revelation part of the error budget.
  const std::uint64_t rev_tl_seed = mix_seed(seed, kRevealTimelines);
  const std::uint64_t rev_s_seed = mix_seed(seed, kRevealStart);
  struct RevPartial {
    std::vector<std::uint64_t> hits;
    MeanAcc v;
    CountAcc f1;
    void merge(const RevPartial& o) {
      if (hits.size() < o.hits.size()) hits.resize(o.hits.size(), 0);
      for (std::size_t i = 0; i < o.hits.size(); ++i) hits[i] += o.hits[i];
      v.merge(o.v);
      f1.merge(o.f1);
    }
  };
  RevPartial rp = run_replications<RevPartial>(
      reveal_reps, threads, [&](std::uint64_t rep, RevPartial& p) {
        if (p.hits.empty()) p.hits.assign(cells.size(), 0);
        const Timeline tl = Timeline::sample(box, T, M, rev_tl_seed, rep);
        Rng rs = Rng::keyed(rev_s_seed, rep);
        const double S = T * rs.u01();
        const ExploreResult r = explore_once(tl, S, spec, h);
        double vr = 0;
        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
          if (r.record.in_Z(cells[ci].x, cells[ci].t)) {
            ++p.hits[ci];
            vr += cells[ci].weight * cells[ci].infl;
          }
        }
        p.v.add(2.0 * M * vr);
        p.f1.add(r.f == 1);
      });

  OsssEstimate out;
  out.cells = cells;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const Estimate e = bernoulli_estimate(rp.hits[ci], rp.f1.n, seed);
    out.cells[ci].p_reveal = e.mean;
    out.cells[ci].p_reveal_se = e.se;
  }

  const Estimate vest = rp.v.estimate(seed);
  double var_infl_part = 0;
  for (const OsssCell& c : out.cells) {
    const double term = 2.0 * M * c.weight * c.p_reveal * c.infl_se;
    var_infl_part += term * term;
  }
  out.rhs.mean = vest.mean;
  out.rhs.se = std::sqrt(vest.se * vest.se + var_infl_part);
  out.rhs.n = vest.n;
  out.rhs.seed = seed;
  out.rhs.method = "osss_rhs(trapezoid-t, exact-x, sampled-uw)";
  out.rhs.lo = out.rhs.mean - 1.959963984540054 * out.rhs.se;
  out.rhs.hi = out.rhs.mean + 1.959963984540054 * out.rhs.se;

  out.theta = rp.f1.estimate(seed);
  out.theta.method = "theta_from_exploration/wilson";
  return out;
}

}  // namespace ips
