#include "ofdm/reference_receivers.hpp"

#include <cmath>

#include "ofdm/dictionary.hpp"
#include "ofdm/estimator.hpp"

namespace ofdm {

RobustCovariance robust_covariance(int n, double t_cp, double spacing) {
  RobustCovariance cov;
  cov.scale = 25.0;
  cov.matrix = cmat(n, n);
  for (int m = 0; m < n; ++m) {
    for (int k = 0; k < n; ++k) {
      if (m == k) {
        cov.matrix(m, k) = 1.0;
        continue;
      }
      const cplx jw(0.0, 2.0 * kPi * spacing * (m - k) * t_cp);
      cov.matrix(m, k) = (1.0 - std::exp(-jw)) / jw;
    }
  }
  cov.matrix *= cov.scale;
  // Diagonal loading for factorization stability.
  cov.matrix.diagonal().array() += 1e-10;
  return cov;
}

cvec oracle_lmmse(const cvec& y, const cvec& x_true,
                  const std::vector<double>& delays_true,
                  const rvec& path_variances, double beta_true,
                  const SystemConfig& sys) {
  const int n = sys.n_subcarriers;
  const cmat psi = steering_matrix(n, sys.subcarrier_spacing, delays_true);
  const cmat sigma_h =
      psi * path_variances.asDiagonal() * psi.adjoint();  // prior cov of h
  cmat a = (x_true * x_true.adjoint()).cwiseProduct(sigma_h);  // X Sigma_h X^H
  a.diagonal().array() += beta_true;
  const cvec z = a.ldlt().solve(y);
  return sigma_h * x_true.conjugate().cwiseProduct(z);
}

std::vector<ReceiverIteration> freq_lmmse_receiver(
    const cvec& y, const SystemConfig& sys, const SimConfig& sim,
    const cvec& pilot_values, const ConvCode& code, const Bcjr& bcjr,
    const RobustCovariance& cov) {
  const int n = sys.n_subcarriers;
  std::vector<ReceiverIteration> out;

  SymbolMoments m = pilots_only_moments(sys, pilot_values);
  // Uniform data beliefs for the first estimation pass.
  for (int d = 0; d < sys.n_data(); ++d) {
    const int idx = sys.data_indices[d] - 1;
    m.second[idx] = 1.0;
    m.factor_mask[idx] = 1;
  }

  double beta_hat = y.squaredNorm() / n;
  BitVec prev_u;
  int unchanged = 0;
  for (int outer = 0; outer < sim.max_outer_iters; ++outer) {
    const rvec sym_var = m.second - m.mean.cwiseAbs2();
    cmat a = (m.mean * m.mean.adjoint()).cwiseProduct(cov.matrix);
    a.diagonal() += (beta_hat + cov.matrix.diagonal().real().array() * sym_var.array())
                        .matrix()
                        .cast<cplx>();
    const cvec z = a.ldlt().solve(y);
    const cvec h_hat = cov.matrix * m.mean.conjugate().cwiseProduct(z);

    beta_hat = (y - m.mean.cwiseProduct(h_hat)).squaredNorm() / n;

    const rvec h_second = h_hat.cwiseAbs2();
    SoftInfo soft = decode_pass(y, h_hat, h_second, beta_hat, sys, code, bcjr, 1);

    ReceiverIteration rec;
    rec.h_hat = h_hat;
    rec.info_bits_hat = soft.info_bits_hat;
    rec.info_llr = soft.info_llr;
    rec.beta_hat = beta_hat;
    rec.soft = soft;
    out.push_back(std::move(rec));

    if (!prev_u.empty() && prev_u == out.back().info_bits_hat)
      ++unchanged;
    else
      unchanged = 0;
    prev_u = out.back().info_bits_hat;
    if (unchanged >= sim.outer_patience) break;

    m = moments_from_soft_info(sys, pilot_values, out.back().soft, false);
  }
  return out;
}

}  // namespace ofdm
