#include <cmath>
#include <sstream>

#include "doctest.h"
#include "ips/graphical.hpp"
#include "ips/rates.hpp"
#include "ips/rng.hpp"
#include "ips/timeline.hpp"

using namespace ips;

namespace {

const RateSpec kContact05 = make_contact(1, 0.5);

BoxState random_state(const Box& box, Rng& rng, double p = 0.5) {
  BoxState s = BoxState::all_zeros(box);
  for (std::int32_t i = 0; i < box.size(); ++i) s.set_idx(i, rng.u01() < p);
  return s;
}

}  // namespace

TEST_CASE("sample_timeline determinism and preconditions") {
  const Box box(1, 1);
  const Timeline a = Timeline::sample(box, 2.0, 2.0, 42, 7);
  const Timeline b = Timeline::sample(box, 2.0, 2.0, 42, 7);
  REQUIRE(a.total_in_box() == b.total_in_box());
  for (std::size_t i = 0; i < a.order().size(); ++i) {
    const Atom &x = a.atom(a.order()[i]), &y = b.atom(b.order()[i]);
    CHECK(x.site == y.site);
    CHECK(x.time == y.time);
    CHECK(x.u == y.u);
    CHECK(x.v == y.v);
  }
  const Timeline c = Timeline::sample(box, 2.0, 2.0, 42, 8);
  std::stringstream da, dc;
  a.dump(da);
  c.dump(dc);
  CHECK(da.str() != dc.str());  // different stream, different realization

  CHECK_THROWS_AS(Timeline::sample(box, 0.0, 2.0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(Timeline::sample(box, 1.0, 0.0, 1, 1), std::invalid_argument);
}

TEST_CASE("timeline atoms lie in (0, T] with u in [0, M], v in [0, 1]") {
  const Box box(1, 2);
  const Timeline tl = Timeline::sample(box, 3.0, 2.5, 11, 0);
  double prev = -1;
  for (const AtomKey& k : tl.order()) {
    const Atom& a = tl.atom(k);
    CHECK(a.time > 0);
    CHECK(a.time <= 3.0);
    CHECK(a.u >= 0);
    CHECK(a.u <= 2.5);
    CHECK(a.v >= 0);
    CHECK(a.v <= 1);
    CHECK(a.time >= prev);
    prev = a.time;
  }
}

TEST_CASE("per-site Poisson counts match the intensity mass") {
  // |Lambda_1| * M * T = 3 * 2 * 2 = 12 expected atoms per timeline
  const Box box(1, 1);
  const std::uint64_t reps = 100000;
  double total = 0;
  for (std::uint64_t r = 0; r < reps; ++r) {
    total += static_cast<double>(Timeline::sample(box, 2.0, 2.0, 314, r).total_in_box());
  }
  const double mean = total / static_cast<double>(reps);
  const double sigma = std::sqrt(12.0 / static_cast<double>(reps));
  CHECK(std::abs(mean - 12.0) < 3.0 * sigma);
}

TEST_CASE("nested horizons and nested boxes share atoms") {
  const Box small(1, 1), big(1, 2);
  const Timeline t2 = Timeline::sample(small, 2.0, 2.0, 5, 5);
  const Timeline t1 = Timeline::sample(small, 1.0, 2.0, 5, 5);
  // horizon prefix
  for (std::int32_t i = 0; i < small.size(); ++i) {
    const auto& longer = t2.atoms_in_box(i);
    const auto& shorter = t1.atoms_in_box(i);
    std::size_t nshort = 0;
    while (nshort < longer.size() && longer[nshort].time <= 1.0) ++nshort;
    REQUIRE(shorter.size() == nshort);
    for (std::size_t j = 0; j < nshort; ++j) {
      CHECK(shorter[j].time == longer[j].time);
      CHECK(shorter[j].u == longer[j].u);
      CHECK(shorter[j].v == longer[j].v);
    }
  }
  // box restriction
  const Timeline tb = Timeline::sample(big, 2.0, 2.0, 5, 5);
  for (std::int32_t i = 0; i < small.size(); ++i) {
    const Site s = small.site(i);
    const auto& inner = t2.atoms_in_box(i);
    const auto& outer = tb.atoms_in_box(big.index(s));
    REQUIRE(inner.size() == outer.size());
    for (std::size_t j = 0; j < inner.size(); ++j) CHECK(inner[j].time == outer[j].time);
  }
}

TEST_CASE("classify_mark") {
  CHECK(classify_mark(0.3, 0.5) == Mark::B);
  CHECK(classify_mark(0.3, 0.3) == Mark::A);  // boundary: strict v < h
  CHECK(classify_mark(0.0, 0.0) == Mark::A);
  CHECK(classify_mark(0.99, 0.0) == Mark::A);
}

TEST_CASE("apply_atom interval rule") {
  // contact(0.5): C0 = 1, C1 = 1, M = 2; local (1,0,0) at the origin
  const RateConstants k = constants(kContact05);
  const Box box(1, 1);
  BoxState st = BoxState::all_zeros(box);
  st.set_idx(box.index(site1(-1)), 1);

  Atom a{site1(0), 0.5, 0.4, 1.0};
  CHECK(apply_atom(st, kContact05, k, a, 0.0).get(site1(0)) == 0);  // u < c0
  a.u = 1.2;
  CHECK(apply_atom(st, kContact05, k, a, 0.0).get(site1(0)) == 0);  // keep (was 0)
  a.u = 1.7;
  CHECK(apply_atom(st, kContact05, k, a, 0.0).get(site1(0)) == 1);  // top interval

  // mark B overrides everything
  a.v = 0.0;
  a.u = 1.7;
  BoxState ones = BoxState::all_ones(box);
  CHECK(apply_atom(ones, kContact05, k, a, 0.5).get(site1(0)) == 0);
}

TEST_CASE("evolve basics") {
  const Box box(1, 1);
  SUBCASE("empty timeline keeps the initial state") {
    const Timeline tl = Timeline::empty(box, 2.0, 2.0);
    const Trajectory tr = evolve(BoxState::all_ones(box), tl, kContact05, 0.2);
    CHECK(tr.events.empty());
    CHECK(tr.final_state == BoxState::all_ones(box));
  }
  SUBCASE("h = 1 keeps exactly the atom-free sites") {
    for (std::uint64_t rep = 0; rep < 50; ++rep) {
      const Timeline tl = Timeline::sample(box, 2.0, 2.0, 99, rep);
      const Trajectory tr = evolve(BoxState::all_ones(box), tl, kContact05, 1.0);
      for (std::int32_t i = 0; i < box.size(); ++i) {
        CHECK(tr.final_state.get_idx(i) == (tl.atoms_in_box(i).empty() ? 1 : 0));
      }
    }
  }
  SUBCASE("forcing to zero sticks when no later atoms touch the site") {
    const Timeline tl = Timeline::empty(box, 2.0, 2.0);
    const Forcing f{site1(0), 0.7, 0};
    const Trajectory tr = evolve(BoxState::all_ones(box), tl, kContact05, 0.0, {&f, 1});
    CHECK(tr.final_state.get(site1(0)) == 0);
    CHECK(tr.value_at(site1(0), 0.6) == 1);
    CHECK(tr.value_at(site1(0), 0.7) == 0);
  }
  SUBCASE("forcing validation") {
    const Timeline tl = Timeline::empty(box, 2.0, 2.0);
    const Forcing bad_site{site1(5), 0.5, 1};
    CHECK_THROWS_AS(evolve(BoxState::all_ones(box), tl, kContact05, 0.0, {&bad_site, 1}),
                    std::invalid_argument);
    const Forcing bad_time{site1(0), 2.5, 1};
    CHECK_THROWS_AS(evolve(BoxState::all_ones(box), tl, kContact05, 0.0, {&bad_time, 1}),
                    std::invalid_argument);
  }
}

TEST_CASE("occupation times") {
  const Box box(1, 1);
  SUBCASE("all ones forever") {
    const Timeline tl = Timeline::empty(box, 2.0, 2.0);
    const Trajectory tr = evolve(BoxState::all_ones(box), tl, kContact05, 0.0);
    CHECK(occupation_time(tr, site1(0), 2.0) == doctest::Approx(2.0));
  }
  SUBCASE("single kill at 1.2") {
    const Timeline tl =
        Timeline::from_atoms(box, 2.0, 2.0, {Atom{site1(0), 1.2, 0.0, 1.0}});  // u < c0: kill
    const Trajectory tr = evolve(BoxState::all_ones(box), tl, kContact05, 0.0);
    CHECK(occupation_time(tr, site1(0), 2.0) == doctest::Approx(1.2));
  }
  SUBCASE("absorbing start stays empty") {
    const Timeline tl = Timeline::sample(box, 2.0, 2.0, 7, 3);
    const Trajectory tr = evolve(BoxState::all_zeros(box), tl, kContact05, 0.0);
    CHECK(occupation_time(tr, site1(0), 2.0) == 0.0);
    CHECK(tr.final_state == BoxState::all_zeros(box));
  }
}

TEST_CASE("pathwise monotonicity in the initial state") {
  const Box box(1, 2);
  Rng rng = Rng::keyed(1234);
  for (std::uint64_t rep = 0; rep < 300; ++rep) {
    const Timeline tl = Timeline::sample(box, 2.0, 2.0, 88, rep);
    BoxState lo = random_state(box, rng);
    BoxState hi = lo;
    for (std::int32_t i = 0; i < box.size(); ++i) {
      if (rng.u01() < 0.4) hi.set_idx(i, 1);
    }
    const double h = rng.u01();
    const Trajectory tlo = evolve(lo, tl, kContact05, h);
    const Trajectory thi = evolve(hi, tl, kContact05, h);
    CHECK(pathwise_leq(tlo, thi));
  }
}

TEST_CASE("pathwise monotonicity in h under shared marks") {
  const Box box(1, 2);
  for (std::uint64_t rep = 0; rep < 300; ++rep) {
    const Timeline tl = Timeline::sample(box, 2.0, 2.0, 77, rep);
    Trajectory prev = evolve(BoxState::all_ones(box), tl, kContact05, 0.0);
    for (double h : {0.25, 0.5, 0.75, 1.0}) {
      const Trajectory cur = evolve(BoxState::all_ones(box), tl, kContact05, h);
      CHECK(pathwise_leq(cur, prev));
      prev = cur;
    }
  }
}

TEST_CASE("forced sandwich") {
  const Box box(1, 2);
  Rng rng = Rng::keyed(4321);
  for (std::uint64_t rep = 0; rep < 300; ++rep) {
    const Timeline tl = Timeline::sample(box, 2.0, 2.0, 66, rep);
    const Site x = box.site(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(box.size()))));
    const double t = rng.uniform(0.0, 2.0);
    const double h = rng.u01();
    const Forcing f0{x, t, 0}, f1{x, t, 1};
    const Trajectory mid = evolve(BoxState::all_ones(box), tl, kContact05, h);
    const Trajectory lo = evolve(BoxState::all_ones(box), tl, kContact05, h, {&f0, 1});
    const Trajectory hi = evolve(BoxState::all_ones(box), tl, kContact05, h, {&f1, 1});
    CHECK(pathwise_leq(lo, mid));
    CHECK(pathwise_leq(mid, hi));
  }
}

TEST_CASE("truncation monotonicity across nested boxes") {
  const Box small(1, 1), big(1, 2);
  for (std::uint64_t rep = 0; rep < 300; ++rep) {
    const Timeline ts = Timeline::sample(small, 2.0, 2.0, 55, rep);
    const Timeline tb = Timeline::sample(big, 2.0, 2.0, 55, rep);
    const Trajectory a = evolve(BoxState::all_ones(small), ts, kContact05, 0.1);
    const Trajectory b = evolve(BoxState::all_ones(big), tb, kContact05, 0.1);
    CHECK(pathwise_leq(a, b));
  }
}

TEST_CASE("two-dimensional couplings") {
  const RateSpec spec = make_contact(2, 0.3);
  const RateConstants k = constants(spec);
  const Box small(2, 1), big(2, 2);
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const Timeline ts = Timeline::sample(small, 1.0, k.M, 4141, rep);
    const Timeline tb = Timeline::sample(big, 1.0, k.M, 4141, rep);
    // nesting and h-order on the shared streams
    CHECK(pathwise_leq(evolve(BoxState::all_ones(small), ts, spec, 0.2),
                       evolve(BoxState::all_ones(big), tb, spec, 0.2)));
    CHECK(pathwise_leq(evolve(BoxState::all_ones(big), tb, spec, 0.6),
                       evolve(BoxState::all_ones(big), tb, spec, 0.2)));
  }
}

TEST_CASE("timeline dump/load round-trips exactly") {
  const Box box(1, 2);
  const Timeline tl = Timeline::sample(box, 2.0, 2.4, 2718, 31);
  std::stringstream ss;
  tl.dump(ss);
  const Timeline back = Timeline::load(ss);
  REQUIRE(back.total_in_box() == tl.total_in_box());
  CHECK(back.horizon() == tl.horizon());
  CHECK(back.rate() == tl.rate());
  for (std::size_t i = 0; i < tl.order().size(); ++i) {
    const Atom &a = tl.atom(tl.order()[i]), &b = back.atom(back.order()[i]);
    CHECK(a.site == b.site);
    CHECK(a.time == b.time);
    CHECK(a.u == b.u);
    CHECK(a.v == b.v);
  }
}

TEST_CASE("with_atom rejects exact ties") {
  const Box box(1, 1);
  const Timeline tl =
      Timeline::from_atoms(box, 2.0, 2.0, {Atom{site1(0), 1.0, 0.5, 0.9}});
  CHECK_THROWS_AS(tl.with_atom(Atom{site1(0), 1.0, 0.1, 1.0}), std::invalid_argument);
  const Timeline ok = tl.with_atom(Atom{site1(1), 1.0, 0.1, 1.0});
  CHECK(ok.total_in_box() == 2);
}

TEST_CASE("same configuration twice gives identical trajectories") {
  const Box box(1, 2);
  const Timeline t1 = Timeline::sample(box, 2.0, 2.0, 123, 9);
  const Timeline t2 = Timeline::sample(box, 2.0, 2.0, 123, 9);
  const Trajectory a = evolve(BoxState::all_ones(box), t1, kContact05, 0.3);
  const Trajectory b = evolve(BoxState::all_ones(box), t2, kContact05, 0.3);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].time == b.events[i].time);
    CHECK(a.events[i].site_idx == b.events[i].site_idx);
    CHECK(a.events[i].value == b.events[i].value);
  }
}
