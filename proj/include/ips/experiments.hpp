#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ips/estimate.hpp"
#include "ips/lattice.hpp"
#include "ips/pivotal.hpp"
#include "ips/rates.hpp"

namespace ips {

struct ExperimentConfig {
  RateSpec spec;
  int m = 1;
  std::vector<double> t_grid{1.0};  // ascending, strictly increasing
  std::vector<double> h_grid{0.0};
  std::uint64_t reps = 10000;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir;
  std::string format = "csv";

  // estimator knobs
  std::uint64_t russo_samples = 100000;
  int osss_t_points = 8;
  std::uint64_t osss_infl_reps = 2000;
  double sharp_eps = 0.1;            // slope threshold 1 - eps for h1
  double noise_floor_factor = 10.0;  // theta usable iff > factor / sqrt(reps)
  bool diff_ineq_mc = false;         // substitute Monte Carlo for the oracle
  std::uint64_t brw_reps = 10000;
  PivotalQuery pivotal_query;
  std::vector<Site> explore_sites;
  std::vector<double> explore_times;
  std::uint64_t tail_reps = 10000;
  double epsilon = 0.0;  // for the eps <-> h mapping report

  std::string config_text;  // canonical JSON, hashed into the manifest

  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
};

// Throws config_error on malformed grids or replication counts.
void validate_grids(const ExperimentConfig& cfg);

struct GridCell {
  double h = 0;
  double T = 0;
  Estimate est;
};

// Fresh-timeline Monte Carlo of theta_T^m(h) from the all-ones start. One
// trajectory per (replication, h) serves every T in the grid; replications
// share timelines across h, so the coupled estimates are monotone in h by
// construction.
std::vector<GridCell> estimate_theta(const ExperimentConfig& cfg);

// Sigma_T(h) as the mean occupation time of the origin on [0, T].
std::vector<GridCell> estimate_sigma(const ExperimentConfig& cfg);

enum class CheckStatus { pass, fail, inconclusive };

struct DiffIneqRow {
  double h = 0, T = 0;
  double theta = 0, dtheta = 0, sigma2m = 0;
  double lhs = 0, rhs = 0, budget = 0;
  CheckStatus status = CheckStatus::pass;
  bool corollary_checked = false;  // T >= 1 only
  double corollary_lhs = 0, corollary_rhs = 0;
  CheckStatus corollary_status = CheckStatus::pass;
};

struct DiffIneqReport {
  std::vector<DiffIneqRow> rows;
  bool used_oracle = true;
  double c_const = 0;  // (1 - theta_1^m(0)) / (2 (M/c1(1)) (|Lambda_R|+1))
  bool all_pass() const;
  bool all_conclusive() const;
};

// theta (1 - theta) <= 2 (M/c1(1)) (|Lambda_R|+1) (-theta') Sigma^{2m}/T at
// every grid point, plus the derived lower bound on -theta' for T >= 1.
DiffIneqReport diff_ineq_check(const ExperimentConfig& cfg);

struct ExpFit {
  double h = 0;
  double c_hat = 0, c_se = 0, r2 = 0;
  int points = 0;
  bool ok = false;
  std::string note;
};

struct SharpnessReport {
  std::vector<double> h_grid, t_grid;
  std::vector<std::vector<Estimate>> theta;  // [h][T]
  std::vector<std::vector<Estimate>> sigma;  // [h][T]
  std::vector<double> sigma_slope;           // log Sigma vs log T, top half of the T-grid
  double h1 = 0;
  std::string h1_method;
  std::vector<std::pair<std::string, double>> h1_sensitivity;
  std::vector<ExpFit> fits;  // log theta ~ a - c_h T over usable T's
  double noise_floor = 0;
  std::uint64_t reps = 0;
};

// The sharpness pipeline: theta and Sigma tables, the Sigma-growth-exponent
// detector for h1 (a finite-size estimate by construction; the report keeps
// window variants to expose T-grid sensitivity), and per-h exponential fits.
SharpnessReport sharpness_sweep(const ExperimentConfig& cfg);

// h = eps / (M + eps); the companion time rescale 1/(1-h) maps
// rate-perturbed runs onto h-perturbed ones.
double eps_to_h(double epsilon, double M);
double h_to_eps(double h, double M);
double time_rescale_factor(double h);

}  // namespace ips
