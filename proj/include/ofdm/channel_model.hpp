#pragma once

#include <vector>

#include "ofdm/config.hpp"
#include "ofdm/types.hpp"

namespace ofdm {

struct MultipathChannel {
  int n_paths = 0;             // L~
  std::vector<double> delays;  // tau, seconds
  cvec coeffs;                 // alpha
  cvec freq_response;          // h = Psi(tau) alpha
  double noise_var = 0.0;      // beta, set by observe()
};

// L~ ~ zero-truncated Poisson(lambda); tau_l iid U(0, tau_max);
// alpha_l | tau_l ~ CN(0, u exp(-tau_l/v)) with u normalizing E[|h_i|^2 | L~] = 1.
MultipathChannel draw_channel(const ChannelConfig& cfg, const SystemConfig& sys,
                              uint64_t seed);

// h_n = sum_l alpha_l exp(-j 2 pi df n tau_l), n = 1..N.
cvec freq_response(const std::vector<double>& delays, const cvec& coeffs,
                   const SystemConfig& sys);

int zero_truncated_poisson(double lambda, Rng& rng);

struct Observation {
  cvec y;
  double noise_var;  // beta = ||h||^2 / (SNR * N)
};

Observation observe(const cvec& symbol_vector, const cvec& h, double snr_db,
                    uint64_t seed);

}  // namespace ofdm
