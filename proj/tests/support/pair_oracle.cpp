#include "support/pair_oracle.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ips::testsupport {

namespace {

using Mask = std::uint32_t;

struct Geometry {
  Box box;
  int n = 0;
  int fan = 0;
  std::vector<std::int32_t> nb;  // [site][offset] -> box index or -1

  explicit Geometry(const RateSpec& spec, int m) : box(spec.d, m) {
    n = static_cast<int>(box.size());
    if (n > 8) throw std::invalid_argument("pair oracle: box too large");
    fan = static_cast<int>(spec.nbhd_size());
    nb.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(fan));
    for (int i = 0; i < n; ++i) {
      const Site x = box.site(i);
      for (int b = 0; b < fan; ++b) {
        const Site y = x + spec.site_order[static_cast<std::size_t>(b)];
        nb[static_cast<std::size_t>(i * fan + b)] = box.contains(y) ? box.index(y) : -1;
      }
    }
  }

  Mask local(Mask state, int site) const {
    Mask m = 0;
    for (int b = 0; b < fan; ++b) {
      const std::int32_t j = nb[static_cast<std::size_t>(site * fan + b)];
      if (j >= 0 && ((state >> j) & 1u)) m |= 1u << b;
    }
    return m;
  }
};

struct Edge {
  std::uint32_t to;
  double rate;
};

using Graph = std::vector<std::vector<Edge>>;

// row distribution forward:  pi <- pi e^{G tau}
// column function backward:  q  <- e^{G tau} q
// Both via the same uniformized kernel on an adjacency-list generator.
void expm_apply(const Graph& g, double tau, std::vector<double>& vec, bool row_vector,
                double tol = 1e-12) {
  const std::size_t n = vec.size();
  double lambda = 0;
  std::vector<double> out_rate(n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    double s = 0;
    for (const Edge& e : g[p]) s += e.rate;
    out_rate[p] = s;
    lambda = std::max(lambda, s);
  }
  if (lambda <= 0 || tau <= 0) return;

  const int nseg = std::max(1, static_cast<int>(std::ceil(lambda * tau / 50.0)));
  const double ts = tau / nseg;
  const double mu = lambda * ts;

  std::vector<double> v = vec, nv(n), acc(n);
  for (int seg = 0; seg < nseg; ++seg) {
    std::fill(acc.begin(), acc.end(), 0.0);
    double pois = std::exp(-mu), cum = pois;
    for (std::size_t i = 0; i < n; ++i) acc[i] += pois * v[i];
    for (std::uint64_t k = 1;; ++k) {
      std::fill(nv.begin(), nv.end(), 0.0);
      if (row_vector) {
        for (std::size_t p = 0; p < n; ++p) {
          if (v[p] == 0.0) continue;
          nv[p] += v[p] * (1.0 - out_rate[p] / lambda);
          for (const Edge& e : g[p]) nv[e.to] += v[p] * e.rate / lambda;
        }
      } else {
        for (std::size_t p = 0; p < n; ++p) {
          double s = v[p] * (1.0 - out_rate[p] / lambda);
          for (const Edge& e : g[p]) s += e.rate / lambda * v[e.to];
          nv[p] = s;
        }
      }
      v.swap(nv);
      pois *= mu / static_cast<double>(k);
      cum += pois;
      for (std::size_t i = 0; i < n; ++i) acc[i] += pois * v[i];
      if ((1.0 - cum < tol && static_cast<double>(k) > mu) || pois < 1e-300) break;
      if (k > 200000) throw std::runtime_error("pair oracle: series did not converge");
    }
    v = acc;
  }
  vec = v;
}

Graph single_chain(const RateSpec& spec, const Geometry& geo, double h, double M) {
  const std::size_t nstates = std::size_t{1} << geo.n;
  Graph g(nstates);
  for (Mask s = 0; s < nstates; ++s) {
    for (int x = 0; x < geo.n; ++x) {
      const Mask lm = geo.local(s, x);
      if ((s >> x) & 1u) {
        const double r = (1.0 - h) * spec.c0[lm] + M * h;
        if (r > 0) g[s].push_back({s & ~(1u << x), r});
      } else {
        const double r = (1.0 - h) * spec.c1[lm];
        if (r > 0) g[s].push_back({s | (1u << x), r});
      }
    }
  }
  return g;
}

// Coupled pair chain on {(a,b) : a <= b} driven by shared (atom, u, mark)
// updates; indices are (a << n) | b over the full 4^n table for simplicity.
Graph pair_chain(const RateSpec& spec, const Geometry& geo, double h, double M) {
  const int n = geo.n;
  const std::size_t npairs = std::size_t{1} << (2 * n);
  Graph g(npairs);
  for (Mask b = 0; b < (Mask{1} << n); ++b) {
    // enumerate submasks a of b
    Mask a = b;
    for (;;) {
      const std::uint32_t p = (a << n) | b;
      for (int y = 0; y < n; ++y) {
        const Mask bit = Mask{1} << y;
        const Mask la = geo.local(a, y), lb = geo.local(b, y);
        const double c0a = spec.c0[la], c0b = spec.c0[lb];
        const double c1a = spec.c1[la], c1b = spec.c1[lb];
        auto push = [&](Mask na, Mask nb, double rate) {
          if (rate <= 0) return;
          if (na == a && nb == b) return;
          g[p].push_back({(na << n) | nb, rate});
        };
        // shared u intervals: kill thresholds c0(a) >= c0(b), birth
        // thresholds M - c1(a) >= M - c1(b)
        push(a & ~bit, b & ~bit, (1.0 - h) * c0b + M * h);         // both kill (plus mark B)
        push(a & ~bit, b, (1.0 - h) * (c0a - c0b));                // only the lower kills
        push(a, b | bit, (1.0 - h) * (c1b - c1a));                 // only the upper births
        push(a | bit, b | bit, (1.0 - h) * c1a);                   // both birth
      }
      if (a == 0) break;
      a = (a - 1) & b;
    }
  }
  return g;
}

double injected_a_value(const RateSpec& spec, const Geometry& geo, double M, Mask s, int x,
                        double u) {
  const Mask lm = geo.local(s, x);
  if (u < spec.c0[lm]) return 0;
  if (u < M - spec.c1[lm]) return (s >> x) & 1u;
  return 1;
}

// Lebesgue measure of {u in [0,M] : the injected A-atom leaves x at 1}.
double a_interval_length(const RateSpec& spec, const Geometry& geo, double M, Mask s, int x) {
  const Mask lm = geo.local(s, x);
  double len = spec.c1[lm];
  if ((s >> x) & 1u) len += std::max(0.0, M - spec.c1[lm] - spec.c0[lm]);
  return len;
}

struct OracleContext {
  RateSpec spec;
  Geometry geo;
  double h, M, T;
  Graph single, pair;
  int origin;

  OracleContext(const RateSpec& s, int m, double h_, double T_)
      : spec(s), geo(s, m), h(h_), T(T_) {
    M = constants(spec).M;
    single = single_chain(spec, geo, h, M);
    pair = pair_chain(spec, geo, h, M);
    origin = geo.box.index(Site{});
  }

  std::vector<double> distribution_at(double t) const {
    std::vector<double> pi(std::size_t{1} << geo.n, 0.0);
    pi[(std::size_t{1} << geo.n) - 1] = 1.0;  // all ones
    expm_apply(single, t, pi, /*row_vector=*/true);
    return pi;
  }

  // q[p] = P(origin pair = (0,1) after duration tau from pair state p)
  std::vector<double> pair_success(double tau) const {
    std::vector<double> q(std::size_t{1} << (2 * geo.n), 0.0);
    for (Mask b = 0; b < (Mask{1} << geo.n); ++b) {
      Mask a = b;
      for (;;) {
        if (((a >> origin) & 1u) == 0 && ((b >> origin) & 1u) == 1) q[(a << geo.n) | b] = 1.0;
        if (a == 0) break;
        a = (a - 1) & b;
      }
    }
    expm_apply(pair, tau, q, /*row_vector=*/false);
    return q;
  }
};

}  // namespace

double exact_pivotal_probability(const RateSpec& spec, int m, double h, const Site& x,
                                 double t, double u, double T) {
  if (!(t > 0) || t > T) throw std::invalid_argument("pair oracle: need t in (0, T]");
  const OracleContext ctx(spec, m, h, T);
  if (!ctx.geo.box.contains(x)) return 0.0;
  const int xi = ctx.geo.box.index(x);
  const std::vector<double> pi = ctx.distribution_at(t);
  const std::vector<double> q = ctx.pair_success(T - t);

  double p = 0;
  const Mask nstates = Mask{1} << ctx.geo.n;
  for (Mask s = 0; s < nstates; ++s) {
    if (pi[s] == 0.0) continue;
    if (injected_a_value(ctx.spec, ctx.geo, ctx.M, s, xi, u) != 1) continue;
    const Mask lo = s & ~(Mask{1} << xi);
    const Mask hi = s | (Mask{1} << xi);
    p += pi[s] * q[(lo << ctx.geo.n) | hi];
  }
  return p;
}

double exact_russo_integral(const RateSpec& spec, int m, double h, double T, int t_points) {
  if (t_points % 2 != 0) ++t_points;
  const OracleContext ctx(spec, m, h, T);
  const Mask nstates = Mask{1} << ctx.geo.n;

  auto integrand = [&](double t) {
    // sum over x of E_pi[ len_a(s,x) * q_pair(s with x flipped both ways) ]
    const std::vector<double> pi = ctx.distribution_at(t);
    const std::vector<double> q = ctx.pair_success(T - t);
    double g = 0;
    for (Mask s = 0; s < nstates; ++s) {
      if (pi[s] == 0.0) continue;
      for (int xi = 0; xi < ctx.geo.n; ++xi) {
        const double len = a_interval_length(ctx.spec, ctx.geo, ctx.M, s, xi);
        if (len <= 0) continue;
        const Mask lo = s & ~(Mask{1} << xi);
        const Mask hi = s | (Mask{1} << xi);
        g += pi[s] * len * q[(lo << ctx.geo.n) | hi];
      }
    }
    return g;
  };

  // composite Simpson on [0, T]
  const int n = t_points;
  const double dt = T / n;
  double acc = integrand(0.0) + integrand(T);
  for (int i = 1; i < n; ++i) acc += integrand(i * dt) * (i % 2 ? 4.0 : 2.0);
  return acc * dt / 3.0;
}

}  // namespace ips::testsupport
