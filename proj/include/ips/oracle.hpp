#pragma once

#include <cstdint>
#include <vector>

#include "ips/lattice.hpp"
#include "ips/rates.hpp"

namespace ips {

// Sparse generator of the truncated h-perturbed chain on {0,1}^{Lambda_m}.
// States are bitmasks over box sites in lexicographic order; neighborhoods
// are zero-extended at the boundary. Each entry also carries its d/dh value
// so the semigroup derivative can be propagated alongside the distribution.
struct GeneratorMatrix {
  Box box;
  double h = 0;
  double M = 0;
  std::size_t nstates = 0;
  std::vector<std::uint64_t> row_ptr;
  std::vector<std::uint32_t> col;
  std::vector<double> rate;    // off-diagonal, >= 0
  std::vector<double> drate;   // d rate / dh
  std::vector<double> diag;    // negative row sums
  std::vector<double> ddiag;
  double uni_rate = 0;         // max |diag|
  double dnorm = 0;            // max row L1 of the derivative assembly
};

GeneratorMatrix build_generator(const RateSpec& spec, int m, double h,
                                std::size_t state_cap = std::size_t{1} << 20);

// P(origin occupied at T) from the all-ones start, by uniformization with
// certified series truncation below tol.
double exact_theta(const GeneratorMatrix& gen, double T, double tol = 1e-12);

struct ThetaDeriv {
  double theta = 0;
  double dtheta_dh = 0;
};

// theta and its h-derivative in one pass: the pair (pi_t, d pi_t/dh) is
// propagated through the uniformized series, which is the block-triangular
// (Frechet) derivative of the semigroup.
ThetaDeriv exact_theta_with_derivative(const GeneratorMatrix& gen, double T,
                                       double tol = 1e-12);

double exact_theta(const RateSpec& spec, int m, double h, double T);
double exact_theta_derivative(const RateSpec& spec, int m, double h, double T);

// Integral of theta over [0, T] by adaptive Simpson quadrature.
double exact_sigma(const RateSpec& spec, int m, double h, double T, double tol = 1e-9);

}  // namespace ips
