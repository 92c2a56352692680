// Command-line front end: estimation campaigns, inequality checks, and the
// sharpness pipeline over a JSON configuration.
//
// Exit codes: 0 success, 1 usage/config error, 2 numerical-budget failure,
// 3 I/O error.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ips/errors.hpp"
#include "ips/experiments.hpp"
#include "ips/explore.hpp"
#include "ips/influence.hpp"
#include "ips/manifest.hpp"
#include "ips/oracle.hpp"
#include "ips/pivotal.hpp"
#include "ips/rates.hpp"
#include "ips/rng.hpp"
#include "ips/text.hpp"
#include "ips/version.hpp"

namespace {

using namespace ips;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> reps;
  std::optional<int> threads;
  std::string out_dir;
  std::string format;
};

void add_common(CLI::App* cmd, CommonOpts* o) {
  cmd->add_option("--config", o->config_path, "configuration file (JSON)")->required();
  cmd->add_option("--seed", o->seed, "override run.seed");
  cmd->add_option("--reps", o->reps, "override run.reps");
  cmd->add_option("--threads", o->threads, "override run.threads");
  cmd->add_option("--out", o->out_dir, "output directory (must exist); adds manifest.json");
  cmd->add_option("--format", o->format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

ExperimentConfig load_config(const CommonOpts& o) {
  ExperimentConfig cfg = ExperimentConfig::from_file(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.reps) cfg.reps = *o.reps;
  if (o.threads) cfg.threads = *o.threads;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (!o.format.empty()) cfg.format = o.format;
  return cfg;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
    return os.str();
  }

  std::string json() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t r = 0; r < rows.size(); ++r) {
      os << (r ? ",\n " : "\n ") << "{";
      for (std::size_t i = 0; i < header.size(); ++i) {
        os << (i ? ", " : "") << "\"" << header[i] << "\": \"" << rows[r][i] << "\"";
      }
      os << "}";
    }
    os << "\n]\n";
    return os.str();
  }

  std::string render(const std::string& format) const {
    return format == "json" ? json() : csv();
  }
};

void emit(const ExperimentConfig& cfg, const std::string& name, const std::string& content,
          std::vector<std::pair<std::string, std::string>>* files) {
  if (cfg.out_dir.empty()) {
    std::cout << content;
  } else {
    files->push_back({name, content});
  }
}

void finish(const ExperimentConfig& cfg,
            const std::vector<std::pair<std::string, std::string>>& files) {
  if (cfg.out_dir.empty()) return;
  persist_run(cfg, files);
  std::cout << "wrote " << files.size() << " file(s) + manifest.json to " << cfg.out_dir
            << "\n";
}

std::string site_str(const Site& s, int d) {
  std::ostringstream os;
  for (int i = 0; i < d; ++i) os << (i ? ";" : "") << s.c[i];
  return os.str();
}

int cmd_validate(const ExperimentConfig& cfg) {
  const RateSpec normalized = normalize(cfg.spec);
  const ValidationReport rep = validate(normalized);
  if (rep.valid()) {
    const RateConstants k = constants(normalized);
    std::cout << "valid: |Lambda_R| = " << cfg.spec.nbhd_size() << ", C0 = " << k.C0
              << ", C1 = " << k.C1 << ", M = " << k.M << "\n";
    return 0;
  }
  std::cout << "invalid rate specification:\n" << rep.summary();
  return 1;
}

int cmd_theta(const ExperimentConfig& cfg) {
  Table t;
  t.header = {"h", "T", "m", "estimator", "mean", "stderr", "n", "seed"};
  for (const GridCell& c : estimate_theta(cfg)) {
    t.rows.push_back({fmt_double(c.h), fmt_double(c.T), std::to_string(cfg.m), c.est.method,
                      fmt_double(c.est.mean), fmt_double(c.est.se), std::to_string(c.est.n),
                      std::to_string(c.est.seed)});
  }
  std::vector<std::pair<std::string, std::string>> files;
  emit(cfg, std::string("theta.") + cfg.format, t.render(cfg.format), &files);
  finish(cfg, files);
  return 0;
}

int cmd_sigma(const ExperimentConfig& cfg) {
  Table t;
  t.header = {"h", "T", "m", "estimator", "mean", "stderr", "n", "seed"};
  for (const GridCell& c : estimate_sigma(cfg)) {
    t.rows.push_back({fmt_double(c.h), fmt_double(c.T), std::to_string(cfg.m), c.est.method,
                      fmt_double(c.est.mean), fmt_double(c.est.se), std::to_string(c.est.n),
                      std::to_string(c.est.seed)});
  }
  std::vector<std::pair<std::string, std::string>> files;
  emit(cfg, std::string("sigma.") + cfg.format, t.render(cfg.format), &files);
  finish(cfg, files);
  return 0;
}

int cmd_russo(const ExperimentConfig& cfg) {
  Table t;
  t.header = {"h", "T", "m", "estimator", "mean", "stderr", "n", "seed"};
  for (double T : cfg.t_grid) {
    for (double h : cfg.h_grid) {
      const Estimate e = russo_derivative_mc(cfg.spec, cfg.m, T, h, cfg.russo_samples,
                                             cfg.seed, cfg.threads);
      t.rows.push_back({fmt_double(h), fmt_double(T), std::to_string(cfg.m), e.method,
                        fmt_double(e.mean), fmt_double(e.se), std::to_string(e.n),
                        std::to_string(e.seed)});
    }
  }
  std::vector<std::pair<std::string, std::string>> files;
  emit(cfg, std::string("russo.") + cfg.format, t.render(cfg.format), &files);
  finish(cfg, files);
  return 0;
}

int cmd_pivotal(const ExperimentConfig& cfg) {
  PivotalQuery q = cfg.pivotal_query;
  if (q.T == 0) throw config_error("pivotal: config needs a pivotal section and run.T");
  Table t;
  t.header = {"x", "t", "u", "h", "T", "m", "estimator", "mean", "stderr", "n", "seed"};
  for (double h : cfg.h_grid) {
    q.h = h;
    const Estimate e = pivotal_probability(q, cfg.spec, cfg.reps, cfg.seed, cfg.threads);
    t.rows.push_back({site_str(q.x, cfg.spec.d), fmt_double(q.t), fmt_double(q.u),
                      fmt_double(h), fmt_double(q.T), std::to_string(cfg.m), e.method,
                      fmt_double(e.mean), fmt_double(e.se), std::to_string(e.n),
                      std::to_string(e.seed)});
  }
  std::vector<std::pair<std::string, std::string>> files;
  emit(cfg, std::string("pivotal.") + cfg.format, t.render(cfg.format), &files);
  finish(cfg, files);
  return 0;
}

int cmd_oracle(const ExperimentConfig& cfg) {
  Table t;
  t.header = {"m", "h", "T", "theta_exact", "dtheta_dh_exact", "sigma_exact"};
  for (double h : cfg.h_grid) {
    const GeneratorMatrix gen = build_generator(cfg.spec, cfg.m, h);
    for (double T : cfg.t_grid) {
      const ThetaDeriv td = exact_theta_with_derivative(gen, T);
      const double sig = exact_sigma(cfg.spec, cfg.m, h, T);
      t.rows.push_back({std::to_string(cfg.m), fmt_double(h), fmt_double(T),
                        fmt_double(td.theta), fmt_double(td.dtheta_dh), fmt_double(sig)});
    }
  }
  std::vector<std::pair<std::string, std::string>> files;
  emit(cfg, std::string("oracle.") + cfg.format, t.render(cfg.format), &files);
  finish(cfg, files);
  return 0;
}

int cmd_explore(const ExperimentConfig& cfg) {
  const double T = cfg.t_grid.back();
  const double h = cfg.h_grid.front();
  std::vector<Site> sites = cfg.explore_sites;
  if (sites.empty()) {
    const Box box(cfg.spec.d, cfg.m);
    for (std::int32_t i = 0; i < box.size(); ++i) sites.push_back(box.site(i));
  }
  std::vector<double> times = cfg.explore_times;
  if (times.empty()) {
    for (int j = 1; j <= 5; ++j) times.push_back(T * j / 5.0);
  }

  const double sigma2m = exact_sigma(cfg.spec, 2 * cfg.m, h, T);
  const double bound = (static_cast<double>(cfg.spec.nbhd_size()) + 1.0) * sigma2m / T;

  Table t;
  t.header = {"x", "t", "m", "h", "T", "p_hat", "stderr", "ci_lo", "ci_hi", "n",
              "bound", "within_bound", "seed"};
  for (const Site& x : sites) {
    for (double tt : times) {
      const Estimate e = revelation_probability(x, tt, cfg.spec, h, T, cfg.m, cfg.reps,
                                                cfg.seed, cfg.threads);
      const bool ok = e.mean <= bound + 3.0 * e.se;
      t.rows.push_back({site_str(x, cfg.spec.d), fmt_double(tt), std::to_string(cfg.m),
                        fmt_double(h), fmt_double(T), fmt_double(e.mean), fmt_double(e.se),
                        fmt_double(e.lo), fmt_double(e.hi), std::to_string(e.n),
                        fmt_double(bound), ok ? "1" : "0", std::to_string(e.seed)});
    }
  }

  // determinism spot check rides along
  const Box box(cfg.spec.d, cfg.m);
  const RateConstants k = constants(cfg.spec);
  Rng rs = Rng::keyed(cfg.seed, 0x6578706c6f726521ull);
  std::uint64_t mismatches = 0;
  const std::uint64_t trials = std::min<std::uint64_t>(cfg.reps, 2000);
  for (std::uint64_t r = 0; r < trials; ++r) {
    const Timeline tl = Timeline::sample(box, T, k.M, mix_seed(cfg.seed, 0xdecafull), r);
    if (!check_determinism(tl, T * rs.u01(), cfg.spec, h)) ++mismatches;
  }

  std::vector<std::pair<std::string, std::string>> files;
  emit(cfg, std::string("revelation.") + cfg.format, t.render(cfg.format), &files);
  std::ostringstream summary;
  summary << "{\"determinism_trials\": " << trials << ", \"mismatches\": " << mismatches
          << ", \"revelation_bound\": " << fmt_double(bound) << "}\n";
  emit(cfg, "explore_summary.json", summary.str(), &files);
  finish(cfg, files);
  return mismatches == 0 ? 0 : 2;
}

int cmd_osss_check(const ExperimentConfig& cfg) {
  const double T = cfg.t_grid.back();
  const double h = cfg.h_grid.front();
  const OsssEstimate r = osss_rhs(cfg.spec, h, T, cfg.m, cfg.osss_t_points, cfg.reps,
                                  cfg.osss_infl_reps, cfg.seed, cfg.threads);
  const double var = r.theta.mean * (1.0 - r.theta.mean);
  const bool pass = var <= r.rhs.mean + 3.0 * r.rhs.se;

  std::ostringstream js;
  js << "{\n"
     << "  \"h\": " << fmt_double(h) << ",\n"
     << "  \"T\": " << fmt_double(T) << ",\n"
     << "  \"m\": " << cfg.m << ",\n"
     << "  \"theta\": " << fmt_double(r.theta.mean) << ",\n"
     << "  \"variance\": " << fmt_double(var) << ",\n"
     << "  \"rhs\": " << fmt_double(r.rhs.mean) << ",\n"
     << "  \"rhs_stderr\": " << fmt_double(r.rhs.se) << ",\n"
     << "  \"pass\": " << (pass ? "true" : "false") << ",\n"
     << "  \"seed\": " << cfg.seed << "\n}\n";

  Table cells;
  cells.header = {"x", "t", "weight", "p_reveal", "p_reveal_stderr", "influence",
                  "influence_stderr"};
  for (const OsssCell& c : r.cells) {
    cells.rows.push_back({site_str(c.x, cfg.spec.d), fmt_double(c.t), fmt_double(c.weight),
                          fmt_double(c.p_reveal), fmt_double(c.p_reveal_se),
                          fmt_double(c.infl), fmt_double(c.infl_se)});
  }

  std::vector<std::pair<std::string, std::string>> files;
  emit(cfg, "osss.json", js.str(), &files);
  emit(cfg, "osss_cells.csv", cells.csv(), &files);
  finish(cfg, files);
  return pass ? 0 : 2;
}

const char* status_str(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass:
      return "pass";
    case CheckStatus::fail:
      return "fail";
    case CheckStatus::inconclusive:
      return "inconclusive";
  }
  return "?";
}

int cmd_diff_ineq(const ExperimentConfig& cfg) {
  const DiffIneqReport rep = diff_ineq_check(cfg);
  Table t;
  t.header = {"h", "T", "m", "theta", "dtheta_dh", "sigma_2m", "lhs", "rhs", "budget",
              "status", "corollary_lhs", "corollary_rhs", "corollary_status"};
  for (const DiffIneqRow& r : rep.rows) {
    t.rows.push_back({fmt_double(r.h), fmt_double(r.T), std::to_string(cfg.m),
                      fmt_double(r.theta), fmt_double(r.dtheta), fmt_double(r.sigma2m),
                      fmt_double(r.lhs), fmt_double(r.rhs), fmt_double(r.budget),
                      status_str(r.status),
                      r.corollary_checked ? fmt_double(r.corollary_lhs) : "",
                      r.corollary_checked ? fmt_double(r.corollary_rhs) : "",
                      r.corollary_checked ? status_str(r.corollary_status) : ""});
  }
  std::vector<std::pair<std::string, std::string>> files;
  emit(cfg, std::string("diff_ineq.") + cfg.format, t.render(cfg.format), &files);
  finish(cfg, files);
  if (!rep.all_pass() || !rep.all_conclusive()) {
    std::cerr << "differential inequality: failed or inconclusive rows (see report)\n";
    return 2;
  }
  return 0;
}

int cmd_sharpness(const ExperimentConfig& cfg) {
  const SharpnessReport rep = sharpness_sweep(cfg);
  const double M = constants(cfg.spec).M;

  Table theta;
  theta.header = {"h", "T", "mean", "stderr", "ci_lo", "ci_hi", "n"};
  Table sigma = theta;
  for (std::size_t hi = 0; hi < rep.h_grid.size(); ++hi) {
    for (std::size_t ti = 0; ti < rep.t_grid.size(); ++ti) {
      const Estimate& e = rep.theta[hi][ti];
      theta.rows.push_back({fmt_double(rep.h_grid[hi]), fmt_double(rep.t_grid[ti]),
                            fmt_double(e.mean), fmt_double(e.se), fmt_double(e.lo),
                            fmt_double(e.hi), std::to_string(e.n)});
      const Estimate& s = rep.sigma[hi][ti];
      sigma.rows.push_back({fmt_double(rep.h_grid[hi]), fmt_double(rep.t_grid[ti]),
                            fmt_double(s.mean), fmt_double(s.se), fmt_double(s.lo),
                            fmt_double(s.hi), std::to_string(s.n)});
    }
  }

  Table fits;
  fits.header = {"h", "c_hat", "c_stderr", "r2", "points", "ok", "note", "eps_equivalent",
                 "time_rescale"};
  for (const ExpFit& f : rep.fits) {
    const bool mappable = f.h < 1.0;
    fits.rows.push_back({fmt_double(f.h), fmt_double(f.c_hat), fmt_double(f.c_se),
                         fmt_double(f.r2), std::to_string(f.points), f.ok ? "1" : "0", f.note,
                         mappable ? fmt_double(h_to_eps(f.h, M)) : "inf",
                         mappable ? fmt_double(time_rescale_factor(f.h)) : "inf"});
  }

  std::ostringstream js;
  js << "{\n  \"h1\": " << fmt_double(rep.h1) << ",\n  \"h1_method\": \"" << rep.h1_method
     << "\",\n  \"h1_note\": \"finite-size estimate from the configured T grid\",\n"
     << "  \"noise_floor\": " << fmt_double(rep.noise_floor) << ",\n  \"reps\": " << rep.reps
     << ",\n  \"sigma_growth_slopes\": [";
  for (std::size_t hi = 0; hi < rep.h_grid.size(); ++hi) {
    js << (hi ? ", " : "") << "[" << fmt_double(rep.h_grid[hi]) << ", "
       << fmt_double(rep.sigma_slope[hi]) << "]";
  }
  js << "],\n  \"h1_sensitivity\": {";
  for (std::size_t i = 0; i < rep.h1_sensitivity.size(); ++i) {
    js << (i ? ", " : "") << "\"" << rep.h1_sensitivity[i].first
       << "\": " << fmt_double(rep.h1_sensitivity[i].second);
  }
  js << "}\n}\n";

  std::vector<std::pair<std::string, std::string>> files;
  emit(cfg, "sharpness_theta.csv", theta.csv(), &files);
  emit(cfg, "sharpness_sigma.csv", sigma.csv(), &files);
  emit(cfg, "sharpness_fits.csv", fits.csv(), &files);
  emit(cfg, "sharpness_summary.json", js.str(), &files);
  finish(cfg, files);
  return 0;
}

int cmd_brw_check(const ExperimentConfig& cfg) {
  const RateConstants k = constants(cfg.spec);
  const double T = cfg.t_grid.back();
  const double expected =
      std::exp(k.M * (static_cast<double>(cfg.spec.nbhd_size()) - 1.0) * T);

  MeanAcc acc;
  Rng rng = Rng::keyed(cfg.seed, 0x6272772d636865ull);
  for (std::uint64_t r = 0; r < cfg.brw_reps; ++r) {
    acc.add(static_cast<double>(
        brw_simulate(k.M, cfg.spec.R, cfg.spec.d, T, rng).particles.size()));
  }
  const Estimate e = acc.estimate(cfg.seed);
  const double z = (e.mean - expected) / std::max(e.se, 1e-300);

  Table t;
  t.header = {"M", "R", "d", "T", "reps", "mean", "stderr", "expected", "z"};
  t.rows.push_back({fmt_double(k.M), std::to_string(cfg.spec.R), std::to_string(cfg.spec.d),
                    fmt_double(T), std::to_string(e.n), fmt_double(e.mean), fmt_double(e.se),
                    fmt_double(expected), fmt_double(z)});

  const TailProfile prof = cone_tail_profile(cfg.spec, T, cfg.h_grid.front(), cfg.tail_reps,
                                             cfg.seed, cfg.threads);
  Table tail;
  tail.header = {"distance", "hits", "reps", "p_hat", "ci_lo", "ci_hi"};
  for (const TailRow& r : prof.rows) {
    tail.rows.push_back({std::to_string(r.distance), std::to_string(r.hits),
                         std::to_string(r.reps), fmt_double(r.p_hat), fmt_double(r.lo),
                         fmt_double(r.hi)});
  }

  std::vector<std::pair<std::string, std::string>> files;
  emit(cfg, std::string("brw.") + cfg.format, t.render(cfg.format), &files);
  emit(cfg, "tail.csv", tail.csv(), &files);
  if (prof.slope_ok) {
    std::ostringstream os;
    os << "{\"tail_slope\": " << fmt_double(prof.slope) << "}\n";
    emit(cfg, "tail_slope.json", os.str(), &files);
  }
  finish(cfg, files);
  return std::abs(z) <= 3.0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("ipskit ") + kVersion +
               " - finite-range monotone interacting particle systems: simulation, "
               "exploration, and sharpness analysis"};
  app.require_subcommand(1);

  CommonOpts opts;
  struct Cmd {
    const char* name;
    const char* help;
    int (*run)(const ExperimentConfig&);
  };
  const std::vector<Cmd> cmds = {
      {"validate", "check rate-table conditions; prints violations. exit 1 when invalid",
       cmd_validate},
      {"theta",
       "Monte Carlo survival probability over the (h, T) grids.\n"
       "CSV: h,T,m,estimator,mean,stderr,n,seed",
       cmd_theta},
      {"sigma",
       "mean origin occupation time (integral of theta).\n"
       "CSV: h,T,m,estimator,mean,stderr,n,seed",
       cmd_sigma},
      {"russo",
       "Monte Carlo h-derivative of theta via pivotal sampling.\n"
       "CSV: h,T,m,estimator,mean,stderr,n,seed",
       cmd_russo},
      {"pivotal",
       "pivotal probability of the configured (x, t, u) query.\n"
       "CSV: x,t,u,h,T,m,estimator,mean,stderr,n,seed",
       cmd_pivotal},
      {"explore",
       "revelation probabilities on a site/time grid plus a determinism check.\n"
       "CSV: x,t,m,h,T,p_hat,stderr,ci_lo,ci_hi,n,bound,within_bound,seed",
       cmd_explore},
      {"osss-check",
       "variance bound assembly: theta(1-theta) vs the OSSS right-hand side.\n"
       "JSON summary + CSV cells: x,t,weight,p_reveal,p_reveal_stderr,influence,"
       "influence_stderr",
       cmd_osss_check},
      {"diff-ineq",
       "differential inequality check (oracle route by default).\n"
       "CSV: h,T,m,theta,dtheta_dh,sigma_2m,lhs,rhs,budget,status,corollary_lhs,"
       "corollary_rhs,corollary_status; exit 2 on fail/inconclusive",
       cmd_diff_ineq},
      {"sharpness",
       "theta/Sigma tables, Sigma-growth h1 detection, per-h exponential fits.\n"
       "CSVs: sharpness_theta, sharpness_sigma, sharpness_fits; JSON summary",
       cmd_sharpness},
      {"oracle",
       "exact uniformization values.\nCSV: m,h,T,theta_exact,dtheta_dh_exact,sigma_exact",
       cmd_oracle},
      {"brw-check",
       "branching-random-walk mean check and the cone tail profile.\n"
       "CSV: M,R,d,T,reps,mean,stderr,expected,z and tail.csv: "
       "distance,hits,reps,p_hat,ci_lo,ci_hi",
       cmd_brw_check},
  };

  std::vector<std::pair<CLI::App*, int (*)(const ExperimentConfig&)>> wired;
  for (const Cmd& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, &opts);
    wired.push_back({sub, c.run});
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [sub, run] : wired) {
      if (sub->parsed()) return run(load_config(opts));
    }
    std::cerr << "no subcommand\n";
    return 1;
  } catch (const io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const budget_error& e) {
    std::cerr << "numerical budget: " << e.what() << "\n";
    return 2;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
