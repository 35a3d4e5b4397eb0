#pragma once

#include <vector>

#include "ofdm/config.hpp"
#include "ofdm/decoder.hpp"
#include "ofdm/types.hpp"

namespace ofdm {

struct RobustCovariance {
  cmat matrix;         // scaled prior covariance Sigma' = scale * Sigma
  double scale = 25.0;
};

// Uniform power-delay-profile covariance on [0, T_CP]:
// [Sigma]_{m,n} = (1 - exp(-j 2 pi df (m-n) T_CP)) / (j 2 pi df (m-n) T_CP),
// unit diagonal, scaled by 25.
RobustCovariance robust_covariance(int n, double t_cp, double spacing);

// Genie LMMSE channel estimate: full symbol knowledge, true delays, true
// per-path prior variances and true noise variance.
cvec oracle_lmmse(const cvec& y, const cvec& x_true,
                  const std::vector<double>& delays_true,
                  const rvec& path_variances, double beta_true,
                  const SystemConfig& sys);

struct ReceiverIteration {
  cvec h_hat;
  BitVec info_bits_hat;
  std::vector<double> info_llr;
  double beta_hat = 0.0;
  SoftInfo soft;
};

// Iterative frequency-domain LMMSE receiver with symbol-moment feedback.
// First pass uses pilots only; outer stopping mirrors the main receiver.
std::vector<ReceiverIteration> freq_lmmse_receiver(
    const cvec& y, const SystemConfig& sys, const SimConfig& sim,
    const cvec& pilot_values, const ConvCode& code, const Bcjr& bcjr,
    const RobustCovariance& cov);

}  // namespace ofdm
