#include <algorithm>
#include <string>
#include <vector>

#include "doctest.h"
#include "ips/errors.hpp"
#include "ips/rates.hpp"
#include "ips/rng.hpp"

using namespace ips;

namespace {

bool mask_leq(std::uint32_t a, std::uint32_t b) { return (a & ~b) == 0; }

// full-order monotonicity by brute force over all comparable mask pairs
bool fully_monotone(const RateSpec& s) {
  const std::uint32_t len = static_cast<std::uint32_t>(s.table_len());
  for (std::uint32_t a = 0; a < len; ++a) {
    for (std::uint32_t b = 0; b < len; ++b) {
      if (!mask_leq(a, b)) continue;
      if (s.c1[a] > s.c1[b]) return false;
      if (s.c0[a] < s.c0[b]) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("lexicographic site order and table indexing") {
  const RateSpec s = make_contact(1, 0.5);
  REQUIRE(s.site_order.size() == 3);
  CHECK(s.site_order[0] == site1(-1));
  CHECK(s.site_order[1] == site1(0));
  CHECK(s.site_order[2] == site1(1));
  CHECK(s.center_bit == 1);

  const RateSpec s2 = make_contact(2, 0.5);
  REQUIRE(s2.site_order.size() == 9);
  CHECK(s2.site_order[0] == site2(-1, -1));
  CHECK(s2.site_order[1] == site2(-1, 0));
  CHECK(s2.site_order[4] == site2(0, 0));
  CHECK(s2.center_bit == 4);
}

TEST_CASE("parse built-ins") {
  const RateSpec c = parse_rate_spec(R"({"model":{"d":1,"R":1,"kind":"contact","lambda":0.5}})");
  CHECK(c.table_len() == 8);
  // c1 = lambda * (left + right), c0 = 1
  CHECK(rate_lookup(c, mask_from_bits({1, 0, 0})) == std::pair{1.0, 0.5});
  CHECK(rate_lookup(c, mask_from_bits({0, 0, 0})) == std::pair{1.0, 0.0});
  CHECK(rate_lookup(c, mask_from_bits({1, 1, 1})) == std::pair{1.0, 1.0});

  const RateSpec pd = parse_rate_spec(R"({"model":{"d":1,"R":0,"kind":"pure_death","delta":1.0}})");
  CHECK(pd.table_len() == 2);
  CHECK(pd.c0[0] == 1.0);
  CHECK(pd.c1[0] == 0.0);
  CHECK(pd.c1[1] == 0.0);
  // condition (iii) shows up downstream in validate
  CHECK(!validate(normalize(pd)).valid());

  const RateSpec th = parse_rate_spec(
      R"({"model":{"d":1,"R":1,"kind":"threshold","lambda":0.8,"k":2}})");
  CHECK(rate_lookup(th, mask_from_bits({1, 0, 1})).second == 0.8);
  CHECK(rate_lookup(th, mask_from_bits({1, 0, 0})).second == 0.0);
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_rate_spec("not json"), config_error);
  CHECK_THROWS_AS(parse_rate_spec(R"({"model":{"d":1,"kind":"nosuch"}})"), config_error);
  // built-ins have fixed radii; a disagreeing declaration is rejected
  CHECK_THROWS_AS(parse_rate_spec(R"({"model":{"d":1,"R":2,"kind":"contact","lambda":1}})"),
                  config_error);
  CHECK_THROWS_AS(
      parse_rate_spec(R"({"model":{"d":1,"R":1,"kind":"pure_death","delta":1}})"),
      config_error);
  // 7 entries for |Lambda_R| = 3
  CHECK_THROWS_WITH_AS(
      parse_rate_spec(
          R"({"model":{"d":1,"R":1,"kind":"table","c0_table":[1,1,1,1,1,1,1],"c1_table":[0,0,0,0,0,0,0.5,1]}})"),
      doctest::Contains("table length mismatch"), config_error);
  CHECK_THROWS_AS(
      parse_rate_spec(
          R"({"model":{"d":1,"R":0,"kind":"table","c0_table":[1,-1],"c1_table":[0,1]}})"),
      config_error);
}

TEST_CASE("normalize copies irrelevant entries and is idempotent") {
  RateSpec s = make_contact(1, 0.5);
  // contact tables do not depend on the center bit, so normalize fixes them
  const RateSpec n1 = normalize(s);
  CHECK(n1.c0 == s.c0);
  CHECK(n1.c1 == s.c1);

  // break monotonicity on an irrelevant entry only: c1 at a center-1 mask
  RateSpec broken = s;
  broken.c1[mask_from_bits({1, 1, 1})] = 0.0;  // irrelevant (center occupied)
  CHECK(!validate(broken).valid());
  const RateSpec fixed = normalize(broken);
  CHECK(validate(fixed).valid());
  CHECK(fixed.c1[mask_from_bits({1, 1, 1})] == fixed.c1[mask_from_bits({1, 0, 1})]);

  const RateSpec twice = normalize(fixed);
  CHECK(twice.c0 == fixed.c0);
  CHECK(twice.c1 == fixed.c1);
}

TEST_CASE("validate reports violations with witnesses") {
  SUBCASE("contact is valid") {
    CHECK(validate(normalize(make_contact(1, 0.7))).valid());
  }
  SUBCASE("absorbing violation") {
    RateSpec s = normalize(make_contact(1, 0.5));
    s.c1[0] = 0.1;
    const auto rep = validate(s);
    REQUIRE(!rep.valid());
    bool found = false;
    for (const auto& v : rep.violations) found |= v.condition == "ii" && v.lo == 0;
    CHECK(found);
  }
  SUBCASE("monotonicity violation on relevant center-0 entries") {
    RateSpec s = normalize(make_contact(1, 0.5));
    s.c1[mask_from_bits({0, 0, 1})] = 0.6;
    s.c1[mask_from_bits({1, 0, 1})] = 0.5;
    s = normalize(s);
    const auto rep = validate(s);
    REQUIRE(!rep.valid());
    bool found = false;
    for (const auto& v : rep.violations) {
      found |= v.condition == "i" && v.lo == mask_from_bits({0, 0, 1}) &&
               v.hi == mask_from_bits({1, 0, 1});
    }
    CHECK(found);
  }
}

TEST_CASE("constants") {
  CHECK(constants(make_contact(1, 0.5)).M == 2.0);
  CHECK(constants(make_contact(1, 2.0)).C0 == 1.0);
  CHECK(constants(make_contact(1, 2.0)).C1 == 4.0);
  CHECK(constants(make_contact(1, 2.0)).M == 5.0);

  const RateConstants pd = constants(make_pure_death(1, 0.3));
  CHECK(pd.C0 == 0.3);
  CHECK(pd.C1 == 0.0);
  CHECK(pd.M == 0.3);

  RateSpec dead = make_pure_death(1, 0.0);
  CHECK_THROWS_AS(constants(dead), config_error);
}

TEST_CASE("constants equal the monotone extreme lookups") {
  for (double lam : {0.3, 1.0, 2.5}) {
    const RateSpec s = normalize(make_contact(1, lam));
    REQUIRE(validate(s).valid());
    const RateConstants k = constants(s);
    CHECK(k.C0 == rate_lookup(s, 0).first);
    CHECK(k.C1 == rate_lookup(s, static_cast<std::uint32_t>(s.table_len() - 1)).second);
  }
}

TEST_CASE("covering-pair validation implies full-order monotonicity") {
  // random monotone family: c1 = a*l + b*r + c*center, c0 = K - (p*l+q*r+r2*center)
  Rng rng = Rng::keyed(2024, 7);
  int passing = 0;
  for (int trial = 0; trial < 200; ++trial) {
    RateSpec s = make_contact(1, 0.0);
    const double a = rng.u01(), b = rng.u01(), c = rng.u01();
    const double p = rng.u01(), q = rng.u01(), r2 = rng.u01();
    const double K = p + q + r2 + rng.u01();
    for (std::uint32_t msk = 0; msk < s.table_len(); ++msk) {
      const int l = msk & 1 ? 1 : 0, cen = msk & 2 ? 1 : 0, rr = msk & 4 ? 1 : 0;
      s.c1[msk] = a * l + b * rr + c * cen;
      s.c0[msk] = K - (p * l + q * rr + r2 * cen);
    }
    s.c1[0] = 0.0;
    s = normalize(s);
    if (validate(s).valid()) {
      ++passing;
      CHECK(fully_monotone(s));
    }
  }
  CHECK(passing > 100);

  // scrambled tables that pass the covering check must also pass brute force
  for (int trial = 0; trial < 200; ++trial) {
    RateSpec s = make_contact(1, 0.0);
    for (std::uint32_t msk = 0; msk < s.table_len(); ++msk) {
      s.c1[msk] = rng.u01();
      s.c0[msk] = rng.u01();
    }
    s.c1[0] = 0.0;
    s = normalize(s);
    CHECK(validate(s).valid() == fully_monotone(s));
  }
}

TEST_CASE("validate(normalize(s)) never blames only irrelevant entries") {
  Rng rng = Rng::keyed(99, 1);
  const std::uint32_t center = 1u << 1;
  for (int trial = 0; trial < 100; ++trial) {
    RateSpec s = make_contact(1, rng.u01() * 2.0);
    // scramble only irrelevant entries
    for (std::uint32_t msk = 0; msk < s.table_len(); ++msk) {
      if (msk & center) s.c1[msk] = rng.u01() * 5.0;
      if (!(msk & center)) s.c0[msk] = rng.u01() * 5.0;
    }
    CHECK(validate(normalize(s)).valid());
  }
}
