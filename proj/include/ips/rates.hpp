#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ips/lattice.hpp"

namespace ips {

// Finite-range flip-rate specification. The tables are indexed by the local
// configuration on Lambda_R encoded as a bitmask: bit k is the occupancy of
// site_order[k], where site_order is Lambda_R in lexicographic coordinate
// order (first coordinate slowest). This indexing is part of the on-disk
// configuration contract.
struct RateSpec {
  int d = 1;
  int R = 1;
  std::vector<double> c0;  // rate 1 -> 0, indexed by local mask
  std::vector<double> c1;  // rate 0 -> 1
  std::vector<Site> site_order;
  int center_bit = 0;

  std::size_t nbhd_size() const { return site_order.size(); }
  std::size_t table_len() const { return std::size_t{1} << site_order.size(); }
};

struct RateConstants {
  double C0 = 0;  // max of c0 = c0(all zeros) on a monotone table
  double C1 = 0;  // max of c1 = c1(all ones)
  double M = 0;   // C0 + C1, the per-site Poisson clock rate
};

struct Violation {
  std::string condition;  // "i", "ii", "iii"
  std::uint32_t lo = 0;   // witness masks (covering pair for "i")
  std::uint32_t hi = 0;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
  std::string summary() const;
};

// Built-in families. contact counts occupied non-center sites of the
// radius-1 box; threshold gates on that count; pure_death has R = 0.
RateSpec make_contact(int d, double lambda);
RateSpec make_threshold(int d, double lambda, int k);
RateSpec make_pure_death(int d, double delta);
RateSpec make_table(int d, int R, std::vector<double> c0, std::vector<double> c1);

// Parses a JSON configuration document (either the whole experiment config
// with a "model" section, or the bare model object). Built-ins are expanded
// to explicit tables.
RateSpec parse_rate_spec(const std::string& config_text);

// Overwrites dynamically irrelevant entries from their relevant
// counterparts: c1 at center-1 masks is copied from the center-0 mask,
// c0 at center-0 masks from the center-1 mask.
RateSpec normalize(RateSpec spec);

// Checks (i) monotonicity on covering pairs, (ii) c1(all zeros) = 0,
// (iii) c1(all ones) > 0. Violations are report content, not errors.
ValidationReport validate(const RateSpec& spec);

// Throws config_error when M = 0 or when the table maxima disagree with the
// monotone extremes (a sign the spec was not normalized/monotone).
RateConstants constants(const RateSpec& spec);

std::pair<double, double> rate_lookup(const RateSpec& spec, std::uint32_t local_mask);

std::uint32_t mask_from_bits(const std::vector<int>& bits);

}  // namespace ips
