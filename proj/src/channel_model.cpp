#include "ofdm/channel_model.hpp"

#include <cmath>
#include <stdexcept>

namespace ofdm {

int zero_truncated_poisson(double lambda, Rng& rng) {
  std::poisson_distribution<int> pois(lambda);
  for (;;) {
    const int k = pois(rng);
    if (k > 0) return k;
  }
}

MultipathChannel draw_channel(const ChannelConfig& cfg, const SystemConfig& sys,
                              uint64_t seed) {
  Rng rng(mix_seed(seed, 0x6368616eULL));
  MultipathChannel ch;
  ch.n_paths = zero_truncated_poisson(cfg.poisson_mean, rng);

  const double tau_max = cfg.max_delay;
  const double v = cfg.decay_constant;
  // E[|h_i|^2 | L~] = L~ * u * (v/tau_max)(1 - exp(-tau_max/v)) = target gain.
  const double mean_decay = (v / tau_max) * (1.0 - std::exp(-tau_max / v));
  const double u = cfg.target_mean_gain / (ch.n_paths * mean_decay);

  std::uniform_real_distribution<double> unif(0.0, tau_max);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ch.delays.resize(ch.n_paths);
  ch.coeffs = cvec(ch.n_paths);
  for (int l = 0; l < ch.n_paths; ++l) {
    ch.delays[l] = unif(rng);
    const double var = u * std::exp(-ch.delays[l] / v);
    const double s = std::sqrt(var / 2.0);
    ch.coeffs[l] = cplx(s * gauss(rng), s * gauss(rng));
  }
  ch.freq_response = freq_response(ch.delays, ch.coeffs, sys);
  return ch;
}

cvec freq_response(const std::vector<double>& delays, const cvec& coeffs,
                   const SystemConfig& sys) {
  if (static_cast<int>(delays.size()) != coeffs.size())
    throw std::invalid_argument("delay/coefficient count mismatch");
  const int n = sys.n_subcarriers;
  cvec h = cvec::Zero(n);
  for (size_t l = 0; l < delays.size(); ++l) {
    const double w = -2.0 * kPi * sys.subcarrier_spacing * delays[l];
    for (int k = 0; k < n; ++k) {
      const double ph = w * (k + 1);
      h[k] += coeffs[l] * cplx(std::cos(ph), std::sin(ph));
    }
  }
  return h;
}

Observation observe(const cvec& symbol_vector, const cvec& h, double snr_db,
                    uint64_t seed) {
  if (symbol_vector.size() != h.size())
    throw std::invalid_argument("frame/channel size mismatch");
  const int n = static_cast<int>(h.size());
  const double snr = std::pow(10.0, snr_db / 10.0);
  Observation obs;
  obs.noise_var = h.squaredNorm() / (snr * n);
  Rng rng(mix_seed(seed, 0x6e6f697365ULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double s = std::sqrt(obs.noise_var / 2.0);
  obs.y = cvec(n);
  for (int k = 0; k < n; ++k)
    obs.y[k] = symbol_vector[k] * h[k] + cplx(s * gauss(rng), s * gauss(rng));
  return obs;
}

}  // namespace ofdm
