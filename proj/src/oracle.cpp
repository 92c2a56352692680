#include "ips/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "ips/errors.hpp"

namespace ips {

namespace {

// Local configuration mask around box site x for a state bitmask, reading 0
// outside the box.
std::uint32_t local_mask_of_state(std::uint64_t state, const std::vector<std::int32_t>& nbrow,
                                  std::size_t base, int k) {
  std::uint32_t m = 0;
  for (int b = 0; b < k; ++b) {
    const std::int32_t j = nbrow[base + static_cast<std::size_t>(b)];
    if (j >= 0 && ((state >> j) & 1ull)) m |= 1u << b;
  }
  return m;
}

}  // namespace

GeneratorMatrix build_generator(const RateSpec& spec, int m, double h, std::size_t state_cap) {
  const Box box(spec.d, m);
  const std::int64_t n = box.size();
  if (n > 63) throw budget_error("build_generator: box too large for state bitmasks");
  const std::size_t nstates = std::size_t{1} << n;
  if (nstates > state_cap)
    throw budget_error("build_generator: 2^" + std::to_string(n) + " states exceed the cap");

  const RateConstants k = constants(spec);
  const int fan = static_cast<int>(spec.nbhd_size());
  std::vector<std::int32_t> nb(static_cast<std::size_t>(n) * static_cast<std::size_t>(fan));
  for (std::int64_t i = 0; i < n; ++i) {
    const Site x = box.site(i);
    for (int b = 0; b < fan; ++b) {
      const Site y = x + spec.site_order[static_cast<std::size_t>(b)];
      nb[static_cast<std::size_t>(i) * static_cast<std::size_t>(fan) + static_cast<std::size_t>(b)] =
          box.contains(y) ? box.index(y) : -1;
    }
  }

  GeneratorMatrix gen;
  gen.box = box;
  gen.h = h;
  gen.M = k.M;
  gen.nstates = nstates;
  gen.row_ptr.assign(nstates + 1, 0);
  gen.diag.assign(nstates, 0.0);
  gen.ddiag.assign(nstates, 0.0);
  gen.col.reserve(nstates * static_cast<std::size_t>(n) / 2);
  gen.rate.reserve(gen.col.capacity());
  gen.drate.reserve(gen.col.capacity());

  for (std::uint64_t s = 0; s < nstates; ++s) {
    double dsum = 0, ddsum = 0, dabs = 0;
    for (std::int64_t x = 0; x < n; ++x) {
      const std::uint32_t lm =
          local_mask_of_state(s, nb, static_cast<std::size_t>(x) * static_cast<std::size_t>(fan), fan);
      double r, dr;
      std::uint64_t to;
      if ((s >> x) & 1ull) {
        // kill: (1-h) c0 + M h
        r = (1.0 - h) * spec.c0[lm] + k.M * h;
        dr = k.M - spec.c0[lm];
        to = s & ~(1ull << x);
      } else {
        // birth: (1-h) c1
        r = (1.0 - h) * spec.c1[lm];
        dr = -spec.c1[lm];
        to = s | (1ull << x);
      }
      if (r != 0.0 || dr != 0.0) {
        gen.col.push_back(static_cast<std::uint32_t>(to));
        gen.rate.push_back(r);
        gen.drate.push_back(dr);
        dsum += r;
        ddsum += dr;
        dabs += std::abs(dr);
      }
    }
    gen.diag[s] = -dsum;
    gen.ddiag[s] = -ddsum;
    gen.dnorm = std::max(gen.dnorm, dabs + std::abs(ddsum));
    gen.row_ptr[s + 1] = gen.col.size();
    gen.uni_rate = std::max(gen.uni_rate, dsum);
  }
  return gen;
}

namespace {

// One multiplication by the uniformized kernel K = I + Q / Lambda (row
// vector), plus the derivative companion  w <- w K + v Q'/Lambda.
void kernel_step(const GeneratorMatrix& g, double lambda, const std::vector<double>& v,
                 std::vector<double>* out, const std::vector<double>* w,
                 std::vector<double>* wout) {
  const std::size_t n = g.nstates;
  std::fill(out->begin(), out->end(), 0.0);
  if (wout) std::fill(wout->begin(), wout->end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = v[i];
    const double wi = w ? (*w)[i] : 0.0;
    if (vi != 0.0) {
      (*out)[i] += vi * (1.0 + g.diag[i] / lambda);
      if (wout) (*wout)[i] += vi * (g.ddiag[i] / lambda);
    }
    if (wout && wi != 0.0) (*wout)[i] += wi * (1.0 + g.diag[i] / lambda);
    if (vi == 0.0 && wi == 0.0) continue;
    for (std::uint64_t e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e) {
      const std::uint32_t j = g.col[e];
      if (vi != 0.0) {
        (*out)[j] += vi * g.rate[e] / lambda;
        if (wout) (*wout)[j] += vi * g.drate[e] / lambda;
      }
      if (wout && wi != 0.0) (*wout)[j] += wi * g.rate[e] / lambda;
    }
  }
}

double origin_marginal(const GeneratorMatrix& g, const std::vector<double>& pi) {
  const std::int32_t origin_bit = g.box.index(Site{});
  double p = 0;
  for (std::size_t s = 0; s < g.nstates; ++s) {
    if ((s >> origin_bit) & 1ull) p += pi[s];
  }
  return p;
}

struct UniformizedPair {
  std::vector<double> pi;
  std::vector<double> dpi;
};

// Propagates (pi, dpi) over one or more uniformization segments with the
// per-segment Poisson mass capped so the weights stay in range.
UniformizedPair propagate(const GeneratorMatrix& g, double T, double tol, bool with_derivative) {
  UniformizedPair cur;
  cur.pi.assign(g.nstates, 0.0);
  cur.pi[g.nstates - 1] = 1.0;  // all-ones start
  cur.dpi.assign(g.nstates, 0.0);

  if (T <= 0 || g.uni_rate <= 0) return cur;

  const double lambda = g.uni_rate;
  const int nseg = std::max(1, static_cast<int>(std::ceil(lambda * T / 50.0)));
  const double ts = T / nseg;
  const double mu = lambda * ts;
  const double tol_seg = tol / nseg;
  const double beta = g.dnorm / lambda;  // bound on the per-step derivative mass

  std::vector<double> v = cur.pi, w = cur.dpi;
  std::vector<double> nv(g.nstates), nw(g.nstates);
  std::vector<double> accp(g.nstates), accd(g.nstates);

  for (int seg = 0; seg < nseg; ++seg) {
    std::fill(accp.begin(), accp.end(), 0.0);
    std::fill(accd.begin(), accd.end(), 0.0);
    double w0norm = 0;
    for (double x : w) w0norm += std::abs(x);

    double pois = std::exp(-mu);
    double cum = pois;
    for (std::size_t i = 0; i < g.nstates; ++i) {
      accp[i] += pois * v[i];
      accd[i] += pois * w[i];
    }
    const double tail_factor = 1.0 + w0norm + beta * mu;
    for (std::uint64_t k = 1;; ++k) {
      kernel_step(g, lambda, v, &nv, with_derivative ? &w : nullptr,
                  with_derivative ? &nw : nullptr);
      v.swap(nv);
      if (with_derivative) w.swap(nw);
      pois *= mu / static_cast<double>(k);
      cum += pois;
      for (std::size_t i = 0; i < g.nstates; ++i) {
        accp[i] += pois * v[i];
        if (with_derivative) accd[i] += pois * w[i];
      }
      const double tail = std::max(0.0, 1.0 - cum);
      if (tail * tail_factor < tol_seg && static_cast<double>(k) > mu) break;
      if (pois < 1e-300 && static_cast<double>(k) > mu) break;
      if (k > 100000) throw budget_error("uniformization failed to converge");
    }
    v = accp;
    if (with_derivative) w = accd;
  }
  cur.pi = std::move(v);
  cur.dpi = std::move(w);
  return cur;
}

}  // namespace

double exact_theta(const GeneratorMatrix& gen, double T, double tol) {
  if (T < 0) throw std::invalid_argument("exact_theta: need T >= 0");
  const UniformizedPair p = propagate(gen, T, tol, false);
  return std::clamp(origin_marginal(gen, p.pi), 0.0, 1.0);
}

ThetaDeriv exact_theta_with_derivative(const GeneratorMatrix& gen, double T, double tol) {
  if (T < 0) throw std::invalid_argument("exact_theta_with_derivative: need T >= 0");
  const UniformizedPair p = propagate(gen, T, tol, true);
  ThetaDeriv out;
  out.theta = std::clamp(origin_marginal(gen, p.pi), 0.0, 1.0);
  out.dtheta_dh = origin_marginal(gen, p.dpi);
  return out;
}

double exact_theta(const RateSpec& spec, int m, double h, double T) {
  return exact_theta(build_generator(spec, m, h), T);
}

double exact_theta_derivative(const RateSpec& spec, int m, double h, double T) {
  return exact_theta_with_derivative(build_generator(spec, m, h), T).dtheta_dh;
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth);

double simpson(double fa, double fm, double fb, double a, double b) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(fa, flm, fm, a, m);
  const double right = simpson(fm, frm, fb, m, b);
  if (depth <= 0) return left + right;
  if (std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

}  // namespace

double exact_sigma(const RateSpec& spec, int m, double h, double T, double tol) {
  if (T < 0) throw std::invalid_argument("exact_sigma: need T >= 0");
  if (T == 0) return 0.0;
  const GeneratorMatrix gen = build_generator(spec, m, h);
  const std::function<double(double)> f = [&](double t) { return exact_theta(gen, t); };
  const double fa = f(0.0), fb = f(T), fm = f(0.5 * T);
  return adaptive_simpson(f, 0.0, T, fa, fm, fb, simpson(fa, fm, fb, 0.0, T), tol, 30);
}

}  // namespace ips
