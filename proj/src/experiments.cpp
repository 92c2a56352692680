#include "ips/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ips/errors.hpp"
#include "ips/graphical.hpp"
#include "ips/oracle.hpp"
#include "ips/parallel.hpp"
#include "ips/rng.hpp"
#include "ips/timeline.hpp"

namespace ips {

namespace {

constexpr std::uint64_t kThetaTimelines = 0x74686574612d746cull;
constexpr std::uint64_t kSigmaTimelines = 0x7369676d612d746cull;
constexpr std::uint64_t kDiffIneqSeed = 0x646966662d696e65ull;

void check_grids(const ExperimentConfig& cfg) { validate_grids(cfg); }

struct TableCounts {
  // hits[h][T] for indicators, sums for occupations
  std::vector<std::vector<std::uint64_t>> hits;
  std::vector<std::vector<double>> sum, sumsq;
  std::uint64_t n = 0;
  void init(std::size_t nh, std::size_t nt) {
    hits.assign(nh, std::vector<std::uint64_t>(nt, 0));
    sum.assign(nh, std::vector<double>(nt, 0.0));
    sumsq.assign(nh, std::vector<double>(nt, 0.0));
  }
  void merge(const TableCounts& o) {
    if (o.hits.empty()) return;
    if (hits.empty()) init(o.hits.size(), o.hits.empty() ? 0 : o.hits[0].size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
      for (std::size_t j = 0; j < hits[i].size(); ++j) {
        hits[i][j] += o.hits[i][j];
        sum[i][j] += o.sum[i][j];
        sumsq[i][j] += o.sumsq[i][j];
      }
    }
    n += o.n;
  }
};

// One pass over fresh timelines shared across the h grid; per (h, T) cell it
// accumulates the origin indicator and the origin occupation time.
TableCounts sweep_tables(const ExperimentConfig& cfg, std::uint64_t purpose) {
  const Box box(cfg.spec.d, cfg.m);
  const Evolver ev(box, cfg.spec);
  const double M = ev.consts().M;
  const double Tmax = cfg.t_grid.back();
  const std::uint64_t op_seed = mix_seed(cfg.seed, purpose);
  const BoxState ones = BoxState::all_ones(box);

  return run_replications<TableCounts>(cfg.reps, cfg.threads, [&](std::uint64_t rep, TableCounts& p) {
    if (p.hits.empty()) p.init(cfg.h_grid.size(), cfg.t_grid.size());
    const Timeline tl = Tmax > 0 ? Timeline::sample(box, Tmax, M, op_seed, rep)
                                 : Timeline::empty(box, 0.0, M);
    for (std::size_t hi = 0; hi < cfg.h_grid.size(); ++hi) {
      const Trajectory traj = ev.run(ones, tl, cfg.h_grid[hi]);
      const std::vector<int> vals = traj.values_at(Site{}, cfg.t_grid);
      const std::vector<double> occ = traj.occupations(Site{}, cfg.t_grid);
      for (std::size_t ti = 0; ti < cfg.t_grid.size(); ++ti) {
        p.hits[hi][ti] += static_cast<std::uint64_t>(vals[ti]);
        p.sum[hi][ti] += occ[ti];
        p.sumsq[hi][ti] += occ[ti] * occ[ti];
      }
    }
    ++p.n;
  });
}

}  // namespace

void validate_grids(const ExperimentConfig& cfg) {
  if (cfg.t_grid.empty() || cfg.h_grid.empty()) throw config_error("empty T or h grid");
  if (cfg.t_grid.front() < 0) throw config_error("T must be non-negative");
  for (std::size_t i = 1; i < cfg.t_grid.size(); ++i)
    if (!(cfg.t_grid[i] > cfg.t_grid[i - 1]))
      throw config_error("T grid must be strictly increasing");
  for (std::size_t i = 1; i < cfg.h_grid.size(); ++i)
    if (!(cfg.h_grid[i] > cfg.h_grid[i - 1]))
      throw config_error("h grid must be strictly increasing");
  for (double h : cfg.h_grid)
    if (h < 0 || h > 1) throw config_error("h must lie in [0, 1]");
  if (cfg.reps < 1) throw config_error("need reps >= 1");
}

std::vector<GridCell> estimate_theta(const ExperimentConfig& cfg) {
  check_grids(cfg);
  const TableCounts t = sweep_tables(cfg, kThetaTimelines);
  std::vector<GridCell> out;
  for (std::size_t hi = 0; hi < cfg.h_grid.size(); ++hi) {
    for (std::size_t ti = 0; ti < cfg.t_grid.size(); ++ti) {
      GridCell c{cfg.h_grid[hi], cfg.t_grid[ti], bernoulli_estimate(t.hits[hi][ti], t.n, cfg.seed)};
      c.est.method = "theta_mc/wilson";
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<GridCell> estimate_sigma(const ExperimentConfig& cfg) {
  check_grids(cfg);
  const TableCounts t = sweep_tables(cfg, kSigmaTimelines);
  std::vector<GridCell> out;
  for (std::size_t hi = 0; hi < cfg.h_grid.size(); ++hi) {
    for (std::size_t ti = 0; ti < cfg.t_grid.size(); ++ti) {
      GridCell c{cfg.h_grid[hi], cfg.t_grid[ti],
                 mean_estimate(t.sum[hi][ti], t.sumsq[hi][ti], t.n, cfg.seed)};
      c.est.method = "sigma_occupation_mc";
      out.push_back(std::move(c));
    }
  }
  return out;
}

bool DiffIneqReport::all_pass() const {
  for (const auto& r : rows) {
    if (r.status == CheckStatus::fail) return false;
    if (r.corollary_checked && r.corollary_status == CheckStatus::fail) return false;
  }
  return true;
}

bool DiffIneqReport::all_conclusive() const {
  for (const auto& r : rows) {
    if (r.status == CheckStatus::inconclusive) return false;
    if (r.corollary_checked && r.corollary_status == CheckStatus::inconclusive) return false;
  }
  return true;
}

namespace {

CheckStatus certify_leq(double lhs, double rhs, double budget) {
  if (lhs + budget <= rhs) return CheckStatus::pass;
  if (lhs - budget > rhs) return CheckStatus::fail;
  return lhs <= rhs ? CheckStatus::pass : CheckStatus::inconclusive;
}

}  // namespace

DiffIneqReport diff_ineq_check(const ExperimentConfig& cfg) {
  check_grids(cfg);
  const RateConstants k = constants(cfg.spec);
  const double ratio = k.M / cfg.spec.c1[cfg.spec.table_len() - 1];
  const double fan = static_cast<double>(cfg.spec.nbhd_size()) + 1.0;

  DiffIneqReport rep;
  rep.used_oracle = !cfg.diff_ineq_mc;

  const double theta1_at0 =
      rep.used_oracle
          ? exact_theta(cfg.spec, cfg.m, 0.0, 1.0)
          : [&] {
              ExperimentConfig c1 = cfg;
              c1.t_grid = {1.0};
              c1.h_grid = {0.0};
              c1.seed = mix_seed(cfg.seed, kDiffIneqSeed);
              return estimate_theta(c1)[0].est.mean;
            }();
  rep.c_const = (1.0 - theta1_at0) / (2.0 * ratio * fan);

  for (double T : cfg.t_grid) {
    for (double h : cfg.h_grid) {
      DiffIneqRow row;
      row.h = h;
      row.T = T;
      if (rep.used_oracle) {
        const ThetaDeriv td = exact_theta_with_derivative(build_generator(cfg.spec, cfg.m, h), T);
        row.theta = td.theta;
        row.dtheta = td.dtheta_dh;
        row.sigma2m = exact_sigma(cfg.spec, 2 * cfg.m, h, T);
        row.budget = 1e-8 * std::max(1.0, std::abs(row.sigma2m));
      } else {
        ExperimentConfig c = cfg;
        c.t_grid = {T};
        c.h_grid = {h};
        const Estimate th = estimate_theta(c)[0].est;
        row.theta = th.mean;
        const Estimate d = russo_derivative_mc(cfg.spec, cfg.m, T, h, cfg.russo_samples, cfg.seed,
                                               cfg.threads);
        row.dtheta = d.mean;
        ExperimentConfig c2 = cfg;
        c2.m = 2 * cfg.m;
        c2.t_grid = {T};
        c2.h_grid = {h};
        const Estimate s = estimate_sigma(c2)[0].est;
        row.sigma2m = s.mean;
        // first-order propagation of the three MC errors through the bound
        const double drdh = 2.0 * ratio * fan * s.mean / T;
        row.budget = 3.0 * (std::abs(1.0 - 2.0 * row.theta) * th.se + drdh * d.se +
                            2.0 * ratio * fan * std::abs(row.dtheta) / T * s.se);
      }
      row.lhs = row.theta * (1.0 - row.theta);
      row.rhs = 2.0 * ratio * fan * (-row.dtheta) * row.sigma2m / T;
      row.status = certify_leq(row.lhs, row.rhs, row.budget);
      if (T >= 1.0) {
        row.corollary_checked = true;
        row.corollary_lhs = rep.c_const * T * row.theta / row.sigma2m;
        row.corollary_rhs = -row.dtheta;
        row.corollary_status = certify_leq(row.corollary_lhs, row.corollary_rhs, row.budget);
      }
      rep.rows.push_back(row);
    }
  }
  return rep;
}

namespace {

struct WlsFit {
  double slope = 0, intercept = 0, slope_se = 0, r2 = 0;
  int n = 0;
  bool ok = false;
};

WlsFit weighted_least_squares(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& w) {
  WlsFit f;
  f.n = static_cast<int>(x.size());
  if (f.n < 2) return f;
  double sw = 0, swx = 0, swy = 0;
  for (int i = 0; i < f.n; ++i) {
    sw += w[i];
    swx += w[i] * x[i];
    swy += w[i] * y[i];
  }
  const double xbar = swx / sw, ybar = swy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < f.n; ++i) {
    sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
    sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
    syy += w[i] * (y[i] - ybar) * (y[i] - ybar);
  }
  if (sxx <= 0) return f;
  f.slope = sxy / sxx;
  f.intercept = ybar - f.slope * xbar;
  f.slope_se = std::sqrt(1.0 / sxx);
  f.r2 = syy > 0 ? 1.0 - (syy - f.slope * sxy) / syy : 1.0;
  f.ok = true;
  return f;
}

double slope_over_window(const std::vector<double>& t_grid,
                         const std::vector<Estimate>& sigma_row, std::size_t from) {
  std::vector<double> x, y, w;
  for (std::size_t i = from; i < t_grid.size(); ++i) {
    if (sigma_row[i].mean <= 0) continue;
    x.push_back(std::log(t_grid[i]));
    y.push_back(std::log(sigma_row[i].mean));
    w.push_back(1.0);
  }
  const WlsFit f = weighted_least_squares(x, y, w);
  return f.ok ? f.slope : 0.0;
}

double detect_h1(const std::vector<double>& h_grid, const std::vector<double>& slopes,
                 double eps) {
  for (std::size_t i = 0; i < h_grid.size(); ++i) {
    if (slopes[i] < 1.0 - eps) return h_grid[i];
  }
  return h_grid.back();
}

}  // namespace

SharpnessReport sharpness_sweep(const ExperimentConfig& cfg) {
  check_grids(cfg);
  const TableCounts t = sweep_tables(cfg, kThetaTimelines);

  SharpnessReport rep;
  rep.h_grid = cfg.h_grid;
  rep.t_grid = cfg.t_grid;
  rep.reps = t.n;
  rep.noise_floor = cfg.noise_floor_factor / std::sqrt(static_cast<double>(t.n));

  const std::size_t nh = cfg.h_grid.size(), nt = cfg.t_grid.size();
  rep.theta.assign(nh, {});
  rep.sigma.assign(nh, {});
  for (std::size_t hi = 0; hi < nh; ++hi) {
    for (std::size_t ti = 0; ti < nt; ++ti) {
      rep.theta[hi].push_back(bernoulli_estimate(t.hits[hi][ti], t.n, cfg.seed));
      rep.sigma[hi].push_back(mean_estimate(t.sum[hi][ti], t.sumsq[hi][ti], t.n, cfg.seed));
    }
  }

  // Sigma growth exponent per h over trailing T-windows; the primary window
  // is the top half of the grid.
  const std::size_t half = nt / 2;
  rep.sigma_slope.resize(nh);
  std::vector<double> slope23(nh), slope_drop(nh);
  for (std::size_t hi = 0; hi < nh; ++hi) {
    rep.sigma_slope[hi] = slope_over_window(cfg.t_grid, rep.sigma[hi], half);
    slope23[hi] = slope_over_window(cfg.t_grid, rep.sigma[hi], nt / 3);
    std::vector<Estimate> dropped(rep.sigma[hi].begin(), rep.sigma[hi].end() - 1);
    std::vector<double> tg(cfg.t_grid.begin(), cfg.t_grid.end() - 1);
    slope_drop[hi] = slope_over_window(tg, dropped, tg.size() / 2);
  }
  rep.h1 = detect_h1(cfg.h_grid, rep.sigma_slope, cfg.sharp_eps);
  rep.h1_method = "sigma_growth_exponent(top_half,eps=" + std::to_string(cfg.sharp_eps) + ")";
  rep.h1_sensitivity.push_back({"top_two_thirds", detect_h1(cfg.h_grid, slope23, cfg.sharp_eps)});
  rep.h1_sensitivity.push_back({"drop_last_T", detect_h1(cfg.h_grid, slope_drop, cfg.sharp_eps)});

  // Per-h exponential fits over the usable T range.
  for (std::size_t hi = 0; hi < nh; ++hi) {
    ExpFit fit;
    fit.h = cfg.h_grid[hi];
    std::vector<double> x, y, w;
    for (std::size_t ti = 0; ti < nt; ++ti) {
      const double p = rep.theta[hi][ti].mean;
      if (p <= rep.noise_floor) continue;
      const double pc = std::min(p, 1.0 - 0.5 / static_cast<double>(t.n));
      x.push_back(cfg.t_grid[ti]);
      y.push_back(std::log(pc));
      // Var(log p_hat) ~ (1-p) / (n p)
      w.push_back(static_cast<double>(t.n) * pc / (1.0 - pc));
    }
    fit.points = static_cast<int>(x.size());
    if (fit.points < 4) {
      fit.note = "fewer than 4 usable T points above the noise floor";
    } else {
      const WlsFit f = weighted_least_squares(x, y, w);
      fit.c_hat = -f.slope;
      fit.c_se = f.slope_se;
      fit.r2 = f.r2;
      fit.ok = f.ok;
    }
    rep.fits.push_back(std::move(fit));
  }
  return rep;
}

double eps_to_h(double epsilon, double M) {
  if (epsilon < 0) throw config_error("eps_to_h: need epsilon >= 0");
  if (!(M > 0)) throw config_error("eps_to_h: need M > 0");
  return epsilon / (M + epsilon);
}

double h_to_eps(double h, double M) {
  if (h < 0 || h >= 1) throw config_error("h_to_eps: need h in [0, 1)");
  return M * h / (1.0 - h);
}

double time_rescale_factor(double h) {
  if (h < 0 || h >= 1) throw config_error("time_rescale_factor: need h in [0, 1)");
  return 1.0 / (1.0 - h);
}

}  // namespace ips
