#include "ofdm/linear_solver.hpp"

#include <cmath>
#include <stdexcept>

#include "ofdm/dictionary.hpp"

namespace ofdm {

CgResult cg_solve(const std::function<void(const cvec&, cvec&)>& apply,
                  const cvec& a, double tol, int max_iters) {
  CgResult res;
  const int n = static_cast<int>(a.size());
  res.z = cvec::Zero(n);
  cvec r = a;
  cvec p = r;
  cvec cp(n);
  double rr = r.squaredNorm();
  const double target = tol * tol * a.squaredNorm();
  if (rr <= target) {
    res.converged = true;
    return res;
  }
  for (int it = 0; it < max_iters; ++it) {
    apply(p, cp);
    const double alpha = rr / std::real(p.dot(cp));
    res.z += alpha * p;
    r -= alpha * cp;
    const double rr_new = r.squaredNorm();
    ++res.iterations;
    if (rr_new <= target) {
      res.converged = true;
      return res;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return res;
}

WoodburyResult mu_via_woodbury(const WoodburySystem& sys, double spacing,
                               const cvec& xh_y, double tol, int max_iters) {
  const int n = static_cast<int>(sys.weights.size());
  if (sys.dict_delays.empty()) throw std::invalid_argument("empty active set");
  if ((sys.weights.array() <= 0.0).any())
    throw std::invalid_argument("Woodbury path requires strictly positive weights");

  const cmat psi = steering_matrix(n, spacing, sys.dict_delays);
  const double scale = sys.comp_var / sys.noise_var;  // beta^-1 eta
  const rvec inv_w = sys.weights.cwiseInverse();

  auto apply = [&](const cvec& x, cvec& out) {
    out = inv_w.asDiagonal() * x + scale * (psi * (psi.adjoint() * x));
  };

  WoodburyResult res;
  res.converged = true;
  // Q^-1 b = eta (b - beta^-1 eta Psi^H C^-1 Psi b) for any b.
  auto solve = [&](const cvec& b) {
    CgResult cg = cg_solve(apply, psi * b, tol, max_iters);
    res.cg_iterations += cg.iterations;
    res.converged = res.converged && cg.converged;
    return cvec(sys.comp_var * (b - scale * (psi.adjoint() * cg.z)));
  };

  const cvec p = (psi.adjoint() * xh_y) / sys.noise_var;
  res.mu = solve(p);
  // Iterative refinement on the original system squares the CG error.
  const double p_norm = p.norm();
  for (int round = 0; round < 3; ++round) {
    const cvec weighted = sys.weights.asDiagonal() * (psi * res.mu).eval();
    const cvec resid = p - (psi.adjoint() * weighted) / sys.noise_var -
                       res.mu / sys.comp_var;
    if (resid.norm() <= 1e-12 * p_norm) break;
    res.mu += solve(resid);
  }
  return res;
}

double lambda_max_power(int n, double spacing,
                        const std::vector<double>& delays, double beta,
                        double eta, int iters, uint64_t seed) {
  if (delays.empty()) return 0.0;
  const cmat psi = steering_matrix(n, spacing, delays);
  const double scale = eta / beta;
  Rng rng(mix_seed(seed, 0x65696765ULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  cvec v(n);
  for (int k = 0; k < n; ++k) v[k] = cplx(gauss(rng), gauss(rng));
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    cvec tv = scale * (psi * (psi.adjoint() * v));
    lambda = std::real(v.dot(tv));
    const double nrm = tv.norm();
    if (nrm == 0.0) return 0.0;
    v = tv / nrm;
  }
  return lambda;
}

}  // namespace ofdm
