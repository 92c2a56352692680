#include "ips/rates.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ips/errors.hpp"
#include "json.hpp"

namespace ips {

namespace {

constexpr std::size_t kMaxNbhd = 24;  // table length 2^24 at most

std::vector<Site> checked_offsets(int d, int R) {
  auto offs = ball_offsets(d, R);
  if (offs.size() > kMaxNbhd)
    throw config_error("neighborhood too large: |Lambda_R| = " + std::to_string(offs.size()));
  return offs;
}

int find_center(const std::vector<Site>& offs) {
  for (std::size_t k = 0; k < offs.size(); ++k)
    if (offs[k] == Site{}) return static_cast<int>(k);
  throw std::logic_error("ball offsets missing center");
}

RateSpec skeleton(int d, int R) {
  RateSpec s;
  s.d = d;
  s.R = R;
  s.site_order = checked_offsets(d, R);
  s.center_bit = find_center(s.site_order);
  s.c0.assign(s.table_len(), 0.0);
  s.c1.assign(s.table_len(), 0.0);
  return s;
}

int popcount_noncenter(std::uint32_t mask, int center_bit) {
  mask &= ~(1u << center_bit);
  int n = 0;
  while (mask) {
    n += mask & 1u;
    mask >>= 1;
  }
  return n;
}

void check_rates_finite(const RateSpec& s) {
  for (std::size_t i = 0; i < s.table_len(); ++i) {
    if (!(s.c0[i] >= 0.0) || !std::isfinite(s.c0[i]) || !(s.c1[i] >= 0.0) ||
        !std::isfinite(s.c1[i]))
      throw config_error("negative or non-finite rate at table index " + std::to_string(i));
  }
}

}  // namespace

std::string ValidationReport::summary() const {
  if (violations.empty()) return "valid";
  std::ostringstream os;
  for (const auto& v : violations) {
    os << "(" << v.condition << ") " << v.detail << "\n";
  }
  return os.str();
}

RateSpec make_contact(int d, double lambda) {
  if (lambda < 0) throw config_error("contact: lambda must be >= 0");
  RateSpec s = skeleton(d, 1);
  for (std::uint32_t m = 0; m < s.table_len(); ++m) {
    s.c0[m] = 1.0;
    s.c1[m] = lambda * popcount_noncenter(m, s.center_bit);
  }
  return s;
}

RateSpec make_threshold(int d, double lambda, int k) {
  if (lambda < 0 || k < 0) throw config_error("threshold: need lambda >= 0 and k >= 0");
  RateSpec s = skeleton(d, 1);
  for (std::uint32_t m = 0; m < s.table_len(); ++m) {
    s.c0[m] = 1.0;
    s.c1[m] = popcount_noncenter(m, s.center_bit) >= k ? lambda : 0.0;
  }
  if (k == 0) {
    // count >= 0 would make c1(all zeros) > 0; keep 0 absorbing.
    s.c1[0] = 0.0;
  }
  return s;
}

RateSpec make_pure_death(int d, double delta) {
  if (delta < 0) throw config_error("pure_death: delta must be >= 0");
  RateSpec s = skeleton(d, 0);
  s.c0.assign(s.table_len(), delta);
  s.c1.assign(s.table_len(), 0.0);
  return s;
}

RateSpec make_table(int d, int R, std::vector<double> c0, std::vector<double> c1) {
  RateSpec s = skeleton(d, R);
  if (c0.size() != s.table_len() || c1.size() != s.table_len()) {
    throw config_error("table length mismatch: expected " + std::to_string(s.table_len()) +
                       " entries, got c0=" + std::to_string(c0.size()) +
                       " c1=" + std::to_string(c1.size()));
  }
  s.c0 = std::move(c0);
  s.c1 = std::move(c1);
  check_rates_finite(s);
  return s;
}

RateSpec parse_rate_spec(const std::string& config_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(config_text);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("malformed configuration document: ") + e.what());
  }
  const nlohmann::json& model = doc.contains("model") ? doc.at("model") : doc;
  try {
    if (!model.contains("d") || !model.contains("kind"))
      throw config_error("model section must declare d and kind");
    const int d = model.at("d").get<int>();
    const std::string kind = model.at("kind").get<std::string>();
    auto check_radius = [&](int built_in_r) {
      if (model.contains("R") && model.at("R").get<int>() != built_in_r)
        throw config_error("model " + kind + " has radius " + std::to_string(built_in_r) +
                           "; declared R disagrees");
    };
    if (kind == "contact") {
      check_radius(1);
      return make_contact(d, model.at("lambda").get<double>());
    }
    if (kind == "threshold") {
      check_radius(1);
      return make_threshold(d, model.at("lambda").get<double>(), model.at("k").get<int>());
    }
    if (kind == "pure_death") {
      check_radius(0);
      return make_pure_death(d, model.at("delta").get<double>());
    }
    if (kind == "table") {
      const int R = model.at("R").get<int>();
      return make_table(d, R, model.at("c0_table").get<std::vector<double>>(),
                        model.at("c1_table").get<std::vector<double>>());
    }
    throw config_error("unknown built-in model kind: " + kind);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("bad model section: ") + e.what());
  }
}

RateSpec normalize(RateSpec spec) {
  const std::uint32_t center = 1u << spec.center_bit;
  for (std::uint32_t m = 0; m < spec.table_len(); ++m) {
    if (m & center) {
      spec.c1[m] = spec.c1[m & ~center];
    } else {
      spec.c0[m] = spec.c0[m | center];
    }
  }
  return spec;
}

ValidationReport validate(const RateSpec& spec) {
  ValidationReport rep;
  const std::uint32_t len = static_cast<std::uint32_t>(spec.table_len());
  const int k = static_cast<int>(spec.nbhd_size());

  // (i) on covering pairs (xi, xi^{y,1}); transitivity gives the full order.
  for (std::uint32_t m = 0; m < len; ++m) {
    for (int b = 0; b < k; ++b) {
      if (m & (1u << b)) continue;
      const std::uint32_t up = m | (1u << b);
      if (spec.c1[m] > spec.c1[up]) {
        rep.violations.push_back({"i", m, up,
                                  "c1 decreases on covering pair " + std::to_string(m) +
                                      " <= " + std::to_string(up)});
      }
      if (spec.c0[m] < spec.c0[up]) {
        rep.violations.push_back({"i", m, up,
                                  "c0 increases on covering pair " + std::to_string(m) +
                                      " <= " + std::to_string(up)});
      }
    }
  }
  if (spec.c1[0] != 0.0) {
    rep.violations.push_back({"ii", 0, 0, "c1(all zeros) = " + std::to_string(spec.c1[0])});
  }
  if (!(spec.c1[len - 1] > 0.0)) {
    rep.violations.push_back({"iii", len - 1, len - 1, "c1(all ones) = 0"});
  }
  return rep;
}

RateConstants constants(const RateSpec& spec) {
  RateConstants k;
  k.C0 = *std::max_element(spec.c0.begin(), spec.c0.end());
  k.C1 = *std::max_element(spec.c1.begin(), spec.c1.end());
  k.M = k.C0 + k.C1;
  if (k.C0 != spec.c0[0] || k.C1 != spec.c1[spec.table_len() - 1]) {
    throw config_error(
        "table maxima are not attained at the monotone extremes; "
        "normalize and validate the spec first");
  }
  if (!(k.M > 0.0)) throw config_error("degenerate dynamics: M = 0");
  return k;
}

std::pair<double, double> rate_lookup(const RateSpec& spec, std::uint32_t local_mask) {
  return {spec.c0[local_mask], spec.c1[local_mask]};
}

std::uint32_t mask_from_bits(const std::vector<int>& bits) {
  std::uint32_t m = 0;
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) m |= 1u << i;
  return m;
}

}  // namespace ips
