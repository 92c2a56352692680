#include "ips/pivotal.hpp"

#include <stdexcept>

#include "ips/parallel.hpp"
#include "ips/rng.hpp"

namespace ips {

namespace {

constexpr std::uint64_t kPivotalTimelines = 0x7069766f74616c31ull;
constexpr std::uint64_t kRussoQueries = 0x727573736f2d7131ull;
constexpr std::uint64_t kRussoTimelines = 0x727573736f2d7432ull;
constexpr std::uint64_t kInflQueries = 0x696e666c2d713131ull;
constexpr std::uint64_t kInflTimelines = 0x696e666c2d743232ull;

int origin_indicator(const Evolver& ev, const Timeline& tl, double h, double T) {
  const Trajectory traj = ev.run(BoxState::all_ones(tl.box()), tl, h, {}, T);
  return traj.final_state.get(Site{});
}

bool is_pivotal_impl(const Evolver& ev, const Timeline& tl, const PivotalQuery& q) {
  const Timeline aug = tl.with_atom({q.x, q.t, q.u, /*v=*/1.0});  // v = 1 is mark A for every h
  const BoxState ones = BoxState::all_ones(tl.box());

  // (a): the injected update leaves x occupied at t
  const Trajectory to_t = ev.run(ones, aug, q.h, {}, q.t);
  if (to_t.final_state.get(q.x) != 1) return false;

  // (b): the forced pair splits the origin at T
  const Forcing f0{q.x, q.t, 0};
  const Trajectory low = ev.run(ones, aug, q.h, {&f0, 1}, q.T);
  if (low.final_state.get(Site{}) != 0) return false;
  const Forcing f1{q.x, q.t, 1};
  const Trajectory high = ev.run(ones, aug, q.h, {&f1, 1}, q.T);
  return high.final_state.get(Site{}) == 1;
}

void check_query(const PivotalQuery& q, const Box& box, const RateConstants& k) {
  if (!(q.t > 0) || q.t > q.T)
    throw std::invalid_argument("pivotal query: need t in (0, T]");
  if (q.u < 0 || q.u > k.M) throw std::invalid_argument("pivotal query: need u in [0, M]");
  if (!box.contains(q.x)) throw std::invalid_argument("pivotal query: site outside Lambda_m");
}

}  // namespace

bool is_pivotal(const Timeline& tl, const PivotalQuery& q, const RateSpec& spec) {
  if (q.m != tl.box().m)
    throw std::invalid_argument("is_pivotal: query box size disagrees with the timeline");
  const Evolver ev(tl.box(), spec);
  check_query(q, tl.box(), ev.consts());
  if (q.T > tl.horizon())
    throw std::invalid_argument("is_pivotal: T exceeds the timeline horizon");
  return is_pivotal_impl(ev, tl, q);
}

Estimate pivotal_probability(const PivotalQuery& q, const RateSpec& spec, std::uint64_t reps,
                             std::uint64_t seed, int threads) {
  if (reps < 1) throw std::invalid_argument("pivotal_probability: need reps >= 1");
  if (q.t > q.T) {
    Estimate e;
    e.method = "precondition violated: t > T";
    e.seed = seed;
    return e;
  }
  const Box box(spec.d, q.m);
  const Evolver ev(box, spec);
  check_query(q, box, ev.consts());
  const std::uint64_t op_seed = mix_seed(seed, kPivotalTimelines);

  CountAcc acc = run_replications<CountAcc>(reps, threads, [&](std::uint64_t rep, CountAcc& p) {
    const Timeline tl = Timeline::sample(box, q.T, ev.consts().M, op_seed, rep);
    p.add(is_pivotal_impl(ev, tl, q));
  });
  Estimate e = acc.estimate(seed);
  e.method = "pivotal_mc/wilson";
  return e;
}

Estimate russo_derivative_mc(const RateSpec& spec, int m, double T, double h,
                             std::uint64_t samples, std::uint64_t seed, int threads,
                             std::uint64_t reps_per_sample) {
  if (samples < 1 || reps_per_sample < 1)
    throw std::invalid_argument("russo_derivative_mc: need samples, reps_per_sample >= 1");
  const Box box(spec.d, m);
  const Evolver ev(box, spec);
  const double M = ev.consts().M;
  const double mass = M * static_cast<double>(box.size()) * T;
  const std::uint64_t qseed = mix_seed(seed, kRussoQueries);
  const std::uint64_t tseed = mix_seed(seed, kRussoTimelines);

  CountAcc acc =
      run_replications<CountAcc>(samples, threads, [&](std::uint64_t i, CountAcc& p) {
        Rng rq = Rng::keyed(qseed, i);
        PivotalQuery q;
        q.x = box.site(static_cast<std::int64_t>(rq.below(static_cast<std::uint64_t>(box.size()))));
        q.t = T * (1.0 - rq.u01());  // (0, T]
        q.u = M * rq.u01();
        q.T = T;
        q.m = m;
        q.h = h;
        for (std::uint64_t r = 0; r < reps_per_sample; ++r) {
          const Timeline tl = Timeline::sample(box, T, M, tseed, i * reps_per_sample + r);
          p.add(is_pivotal_impl(ev, tl, q));
        }
      });

  const Estimate base = acc.estimate(seed);
  Estimate e = base;
  e.mean = -mass * base.mean;
  e.se = mass * base.se;
  e.lo = -mass * base.hi;
  e.hi = -mass * base.lo;
  e.method = "russo_mc";
  return e;
}

InfluencePair integrals_I_and_J(const RateSpec& spec, int m, double T, double h,
                                std::uint64_t samples, std::uint64_t seed, int threads) {
  if (samples < 1) throw std::invalid_argument("integrals_I_and_J: need samples >= 1");
  const Box box(spec.d, m);
  const Evolver ev(box, spec);
  const double M = ev.consts().M;
  const double mass = M * static_cast<double>(box.size()) * T;
  const std::uint64_t qseed = mix_seed(seed, kInflQueries);
  const std::uint64_t tseed = mix_seed(seed, kInflTimelines);

  struct Partial {
    CountAcc i_acc, j_acc;
    void merge(const Partial& o) {
      i_acc.merge(o.i_acc);
      j_acc.merge(o.j_acc);
    }
  };

  Partial acc = run_replications<Partial>(samples, threads, [&](std::uint64_t i, Partial& p) {
    Rng rq = Rng::keyed(qseed, i);
    PivotalQuery q;
    q.x = box.site(static_cast<std::int64_t>(rq.below(static_cast<std::uint64_t>(box.size()))));
    q.t = T * (1.0 - rq.u01());
    q.u = M * rq.u01();
    q.T = T;
    q.m = m;
    q.h = h;
    const bool mark_b = rq.u01() < h;

    const Timeline tl = Timeline::sample(box, T, M, tseed, i);
    const int f_base = origin_indicator(ev, tl, h, T);
    const Timeline aug = tl.with_atom({q.x, q.t, q.u, mark_b ? 0.0 : 1.0});
    const int f_aug = origin_indicator(ev, aug, h, T);
    p.i_acc.add(f_base != f_aug);
    p.j_acc.add(is_pivotal_impl(ev, tl, q));
  });

  auto scale = [&](const CountAcc& a, const char* method) {
    Estimate e = a.estimate(seed);
    e.mean *= mass;
    e.se *= mass;
    e.lo *= mass;
    e.hi *= mass;
    e.method = method;
    return e;
  };
  return {scale(acc.i_acc, "influence_I_mc"), scale(acc.j_acc, "pivotal_J_mc")};
}

}  // namespace ips
