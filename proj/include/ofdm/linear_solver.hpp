#pragma once

#include <functional>
#include <vector>

#include "ofdm/types.hpp"

namespace ofdm {

struct CgResult {
  cvec z;
  int iterations = 0;
  bool converged = false;
};

// Conjugate gradient for Hermitian positive-definite operators.
// apply(x, out) computes out = C x. Stops at ||C z - a|| <= tol * ||a||.
CgResult cg_solve(const std::function<void(const cvec&, cvec&)>& apply,
                  const cvec& a, double tol, int max_iters);

struct WoodburySystem {
  std::vector<double> dict_delays;  // tau of the active components
  rvec weights;                     // <|x_n|^2>, strictly positive
  double noise_var = 0.0;           // beta
  double comp_var = 0.0;            // eta
};

struct WoodburyResult {
  cvec mu;
  int cg_iterations = 0;
  bool converged = false;
};

// Solves (beta^-1 Psi^H W Psi + eta^-1 I) mu = beta^-1 Psi^H <X>^H y through
// the transformed N-dim system C z = a with C = W^-1 + beta^-1 eta Psi Psi^H,
// solved by CG. xh_y is the vector <X>^H y.
WoodburyResult mu_via_woodbury(const WoodburySystem& sys, double spacing,
                               const cvec& xh_y, double tol, int max_iters);

// Largest eigenvalue of T = beta^-1 eta Psi Psi^H by power iteration.
double lambda_max_power(int n, double spacing,
                        const std::vector<double>& delays, double beta,
                        double eta, int iters = 200, uint64_t seed = 0);

}  // namespace ofdm
