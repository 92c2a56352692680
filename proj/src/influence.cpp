#include "ips/influence.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "ips/errors.hpp"
#include "ips/parallel.hpp"

namespace ips {

InfluenceCone backward_cone(const Timeline& tl, double T, int R, const Site& target,
                            std::size_t max_jumps) {
  if (T < 0 || T > tl.horizon())
    throw std::invalid_argument("backward_cone: need 0 <= T <= timeline horizon");
  const std::vector<Site> offsets = ball_offsets(tl.box().d, R);

  InfluenceCone cone;
  cone.target = target;
  cone.horizon = T;
  cone.entered[target] = T;

  struct Tracked {
    Site site;
    const std::vector<Atom>* atoms;
    std::ptrdiff_t cursor;  // index of last atom with time < current t
  };
  std::vector<Tracked> tracked;

  auto track = [&](const Site& s, double tcur) {
    const std::vector<Atom>& atoms = tl.atoms_at(s);
    std::ptrdiff_t c = static_cast<std::ptrdiff_t>(atoms.size()) - 1;
    while (c >= 0 && atoms[static_cast<std::size_t>(c)].time >= tcur) --c;
    tracked.push_back({s, &atoms, c});
  };

  track(target, T);
  double tcur = T;

  for (;;) {
    // latest atom strictly before tcur over the current cone
    std::ptrdiff_t best = -1;
    double best_time = 0;
    for (std::size_t i = 0; i < tracked.size(); ++i) {
      Tracked& tr = tracked[i];
      while (tr.cursor >= 0 &&
             (*tr.atoms)[static_cast<std::size_t>(tr.cursor)].time >= tcur)
        --tr.cursor;
      if (tr.cursor < 0) continue;
      const double t = (*tr.atoms)[static_cast<std::size_t>(tr.cursor)].time;
      if (best < 0 || t > best_time ||
          (t == best_time && tr.site < tracked[static_cast<std::size_t>(best)].site)) {
        best = static_cast<std::ptrdiff_t>(i);
        best_time = t;
      }
    }
    if (best < 0) break;

    const Site via = tracked[static_cast<std::size_t>(best)].site;
    tcur = best_time;
    ConeJump jump;
    jump.time = tcur;
    jump.via = via;
    for (const Site& o : offsets) {
      const Site y = via + o;
      if (cone.entered.emplace(y, tcur).second) {
        jump.added.push_back(y);
        track(y, tcur);
      }
    }
    cone.jumps.push_back(std::move(jump));
    if (cone.jumps.size() > max_jumps)
      throw budget_error("backward_cone: jump cap exceeded");
  }
  return cone;
}

Trajectory evolve_in_cone(const BoxState& init, const Timeline& tl, const RateSpec& spec,
                          double h, const InfluenceCone& cone) {
  std::vector<Atom> kept;
  for (const AtomKey& k : tl.order()) {
    const Atom& a = tl.atom(k);
    if (cone.contains(a.site, a.time)) kept.push_back(a);
  }
  const Extent ext = tl.extent() == Extent::lazy ? Extent::truncated : tl.extent();
  const Timeline restricted =
      Timeline::from_atoms(tl.box(), tl.horizon(), tl.rate(), std::move(kept), ext);
  return evolve(init, restricted, spec, h);
}

BrwPopulation brw_simulate(double M, int R, int d, double T, Rng& rng, std::size_t cap) {
  if (T < 0) throw std::invalid_argument("brw_simulate: need T >= 0");
  if (!(M > 0)) throw std::invalid_argument("brw_simulate: need M > 0");
  const std::vector<Site> offsets = ball_offsets(d, R);

  BrwPopulation pop;
  pop.particles.push_back(Site{});
  double t = 0;
  for (;;) {
    const double total = M * static_cast<double>(pop.particles.size());
    t += rng.exponential(total);
    if (t > T) break;
    const std::size_t pick = static_cast<std::size_t>(rng.below(pop.particles.size()));
    const Site y = pop.particles[pick];
    pop.particles[pick] = pop.particles.back();
    pop.particles.pop_back();
    if (pop.particles.size() + offsets.size() > cap)
      throw budget_error("brw_simulate: population cap exceeded");
    for (const Site& o : offsets) pop.particles.push_back(y + o);
  }
  pop.elapsed = T;
  return pop;
}

namespace {

constexpr std::uint64_t kConePurpose = 0x636f6e6570726f66ull;  // "coneprof"

struct TailPartial {
  std::vector<std::uint64_t> hist;
  std::uint64_t reps = 0;
  void merge(const TailPartial& o) {
    if (o.hist.size() > hist.size()) hist.resize(o.hist.size(), 0);
    for (std::size_t i = 0; i < o.hist.size(); ++i) hist[i] += o.hist[i];
    reps += o.reps;
  }
};

}  // namespace

TailProfile cone_tail_profile(const RateSpec& spec, double T, double h, std::uint64_t reps,
                              std::uint64_t seed, int threads) {
  (void)h;  // the cone is driven by (site, time) only
  if (reps < 1) throw std::invalid_argument("cone_tail_profile: need reps >= 1");
  const RateConstants k = constants(spec);
  const Box seed_box(spec.d, 0);
  const std::uint64_t op_seed = mix_seed(seed, kConePurpose);

  TailPartial total = run_replications<TailPartial>(
      reps, threads, [&](std::uint64_t rep, TailPartial& p) {
        const Timeline tl = Timeline::sample(seed_box, T, k.M, op_seed, rep, Extent::lazy);
        const InfluenceCone cone = backward_cone(tl, T, spec.R, Site{});
        std::set<int> dists;
        for (const auto& [s, at] : cone.entered) dists.insert(linf_norm(s));
        for (int dd : dists) {
          if (p.hist.size() <= static_cast<std::size_t>(dd)) p.hist.resize(static_cast<std::size_t>(dd) + 1, 0);
          ++p.hist[static_cast<std::size_t>(dd)];
        }
        ++p.reps;
      });

  TailProfile prof;
  prof.seed = seed;
  for (std::size_t dd = 0; dd < total.hist.size(); ++dd) {
    TailRow row;
    row.distance = static_cast<int>(dd);
    row.hits = total.hist[dd];
    row.reps = total.reps;
    const Estimate e = bernoulli_estimate(row.hits, row.reps, seed);
    row.p_hat = e.mean;
    row.lo = e.lo;
    row.hi = e.hi;
    prof.rows.push_back(row);
  }

  // log-linear decay diagnostic over well-observed distances
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int npts = 0;
  for (const TailRow& r : prof.rows) {
    if (r.hits < 30 || r.p_hat <= 0) continue;
    const double x = r.distance, y = std::log(r.p_hat);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++npts;
  }
  if (npts >= 2 && sxx * npts - sx * sx > 0) {
    prof.slope = (sxy * npts - sx * sy) / (sxx * npts - sx * sx);
    prof.slope_ok = true;
  }
  return prof;
}

}  // namespace ips
