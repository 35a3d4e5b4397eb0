#include "ofdm/decoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ofdm/estimator.hpp"

namespace ofdm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double clamp_llr(double l) { return std::clamp(l, -kLlrClamp, kLlrClamp); }

// max-star: ln(e^a + e^b), exact.
double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  const double d = hi - lo;
  return d > 37.0 ? hi : hi + std::log1p(std::exp(-d));
}

// log P(b=0), log P(b=1) from an LLR.
void bit_log_probs(double llr, double& lp0, double& lp1) {
  const double l = clamp_llr(llr);
  lp1 = -std::log1p(std::exp(l));
  lp0 = l + lp1;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

SymbolPmf demap_message(cplx y, cplx h_mean, double h_second, double beta,
                        cplx* mean_out, double* var_out) {
  const Qam256& qam = qam256();
  SymbolPmf pmf(Qam256::size());
  if (h_second <= 0.0) {
    std::fill(pmf.begin(), pmf.end(), 1.0 / Qam256::size());
    if (mean_out) *mean_out = 0.0;
    if (var_out) *var_out = std::numeric_limits<double>::infinity();
    return pmf;
  }
  const cplx m = y * std::conj(h_mean) / h_second;
  const double v = beta / h_second;
  if (mean_out) *mean_out = m;
  if (var_out) *var_out = v;
  if (v <= 0.0) {  // noiseless limit: delta at the nearest symbol
    pmf[qam.hard_demap(m)] = 1.0;
    return pmf;
  }
  double max_e = kNegInf;
  for (int k = 0; k < Qam256::size(); ++k) {
    pmf[k] = -std::norm(qam.symbol(k) - m) / v;
    max_e = std::max(max_e, pmf[k]);
  }
  double sum = 0.0;
  for (double& p : pmf) {
    p = std::exp(p - max_e);
    sum += p;
  }
  for (double& p : pmf) p /= sum;
  return pmf;
}

Bcjr::Bcjr(const ConvCode& code) {
  memory_ = code.memory();
  n_states_ = code.n_states();
  next_.resize(n_states_);
  out_.resize(n_states_);
  for (int s = 0; s < n_states_; ++s) {
    for (int b = 0; b < 2; ++b) {
      const unsigned reg = (static_cast<unsigned>(b) << memory_) | s;
      const int o1 = std::popcount(reg & static_cast<unsigned>(code.poly_a)) & 1;
      const int o2 = std::popcount(reg & static_cast<unsigned>(code.poly_b)) & 1;
      next_[s][b] = static_cast<int>(reg >> 1);
      out_[s][b] = (o1 << 1) | o2;
    }
  }
}

Bcjr::Result Bcjr::decode(const std::vector<double>& channel_llrs) const {
  if (channel_llrs.size() % 2 != 0)
    throw std::invalid_argument("channel LLR count must be even");
  const int steps = static_cast<int>(channel_llrs.size() / 2);
  const int ns = n_states_;

  // Per-step log-probabilities of the two coded bits.
  std::vector<std::array<double, 4>> lp(steps);  // lp[t] = {c1:0, c1:1, c2:0, c2:1}
  for (int t = 0; t < steps; ++t) {
    bit_log_probs(channel_llrs[2 * t], lp[t][0], lp[t][1]);
    bit_log_probs(channel_llrs[2 * t + 1], lp[t][2], lp[t][3]);
  }
  auto gamma = [&](int t, int s, int b) {
    const int o = out_[s][b];
    return lp[t][(o >> 1) & 1] + lp[t][2 + (o & 1)];
  };

  std::vector<std::vector<double>> alpha(steps + 1, std::vector<double>(ns, kNegInf));
  std::vector<std::vector<double>> beta(steps + 1, std::vector<double>(ns, kNegInf));
  alpha[0][0] = 0.0;
  beta[steps][0] = 0.0;  // zero-tail termination

  for (int t = 0; t < steps; ++t) {
    auto& a = alpha[t];
    auto& an = alpha[t + 1];
    for (int s = 0; s < ns; ++s) {
      if (a[s] == kNegInf) continue;
      for (int b = 0; b < 2; ++b) {
        const int n = next_[s][b];
        an[n] = log_add(an[n], a[s] + gamma(t, s, b));
      }
    }
  }
  for (int t = steps - 1; t >= 0; --t) {
    auto& bn = beta[t + 1];
    auto& b0 = beta[t];
    for (int s = 0; s < ns; ++s) {
      double acc = kNegInf;
      for (int b = 0; b < 2; ++b)
        acc = log_add(acc, gamma(t, s, b) + bn[next_[s][b]]);
      b0[s] = acc;
    }
  }

  Result res;
  res.info_posterior_llr.resize(steps);
  res.coded_extrinsic_llr.resize(2 * steps);
  for (int t = 0; t < steps; ++t) {
    double in0 = kNegInf, in1 = kNegInf;
    double c1[2] = {kNegInf, kNegInf};
    double c2[2] = {kNegInf, kNegInf};
    for (int s = 0; s < n_states_; ++s) {
      if (alpha[t][s] == kNegInf) continue;
      for (int b = 0; b < 2; ++b) {
        const double m = alpha[t][s] + gamma(t, s, b) + beta[t + 1][next_[s][b]];
        if (m == kNegInf) continue;
        (b == 0 ? in0 : in1) = log_add(b == 0 ? in0 : in1, m);
        const int o = out_[s][b];
        c1[(o >> 1) & 1] = log_add(c1[(o >> 1) & 1], m);
        c2[o & 1] = log_add(c2[o & 1], m);
      }
    }
    res.info_posterior_llr[t] = clamp_llr(in0 - in1);
    res.coded_extrinsic_llr[2 * t] =
        clamp_llr((c1[0] - c1[1]) - clamp_llr(channel_llrs[2 * t]));
    res.coded_extrinsic_llr[2 * t + 1] =
        clamp_llr((c2[0] - c2[1]) - clamp_llr(channel_llrs[2 * t + 1]));
  }
  return res;
}

SymbolPmf mapper_to_symbol(const double* bit_prior_llr) {
  const Qam256& qam = qam256();
  double p0[8], p1[8];
  for (int q = 0; q < 8; ++q) {
    p0[q] = sigmoid(clamp_llr(bit_prior_llr[q]));
    p1[q] = 1.0 - p0[q];
  }
  SymbolPmf msg(Qam256::size());
  double sum = 0.0;
  for (int k = 0; k < Qam256::size(); ++k) {
    double p = 1.0;
    for (int q = 0; q < 8; ++q) p *= qam.bit(k, q) ? p1[q] : p0[q];
    msg[k] = p;
    sum += p;
  }
  for (double& p : msg) p /= sum;
  return msg;
}

std::array<double, 8> mapper_to_bits(const SymbolPmf& channel_pmf,
                                     const double* bit_prior_llr) {
  const Qam256& qam = qam256();
  double p0[8], p1[8];
  for (int q = 0; q < 8; ++q) {
    // Floor keeps per-bit division in the extrinsic well defined.
    p0[q] = std::clamp(sigmoid(clamp_llr(bit_prior_llr[q])), 1e-12, 1.0 - 1e-12);
    p1[q] = 1.0 - p0[q];
  }
  double s0[8] = {0}, s1[8] = {0};
  for (int k = 0; k < Qam256::size(); ++k) {
    if (channel_pmf[k] == 0.0) continue;
    double full = channel_pmf[k];
    for (int q = 0; q < 8; ++q) full *= qam.bit(k, q) ? p1[q] : p0[q];
    for (int q = 0; q < 8; ++q) {
      if (qam.bit(k, q))
        s1[q] += full / p1[q];
      else
        s0[q] += full / p0[q];
    }
  }
  std::array<double, 8> out;
  for (int q = 0; q < 8; ++q) {
    if (s0[q] == 0.0 && s1[q] == 0.0) out[q] = 0.0;
    else if (s1[q] == 0.0) out[q] = kLlrClamp;
    else if (s0[q] == 0.0) out[q] = -kLlrClamp;
    else out[q] = clamp_llr(std::log(s0[q]) - std::log(s1[q]));
  }
  return out;
}

SymbolPmf symbol_beliefs(const SymbolPmf& channel_pmf, const SymbolPmf& mapper_msg,
                         cplx* mean, double* second, int* uniform_fallbacks) {
  const Qam256& qam = qam256();
  SymbolPmf q(Qam256::size());
  double sum = 0.0;
  for (int k = 0; k < Qam256::size(); ++k) {
    q[k] = channel_pmf[k] * mapper_msg[k];
    sum += q[k];
  }
  if (sum <= 0.0) {
    std::fill(q.begin(), q.end(), 1.0 / Qam256::size());
    if (uniform_fallbacks) ++(*uniform_fallbacks);
    sum = 1.0;
  } else {
    for (double& p : q) p /= sum;
  }
  cplx m = 0.0;
  double m2 = 0.0;
  for (int k = 0; k < Qam256::size(); ++k) {
    m += q[k] * qam.symbol(k);
    m2 += q[k] * std::norm(qam.symbol(k));
  }
  if (mean) *mean = m;
  if (second) *second = m2;
  return q;
}

SoftInfo decode_pass(const cvec& y, const cvec& h_mean, const rvec& h_second,
                     double beta, const SystemConfig& sys, const ConvCode& code,
                     const Bcjr& bcjr, int n_bp_iters) {
  const int n_data = sys.n_data();
  const int q_bits = sys.bits_per_symbol;
  const size_t n_coded = static_cast<size_t>(n_data) * q_bits;
  const auto perm = interleaver_permutation(n_coded, sys.interleaver_seed);

  SoftInfo info;
  info.demap_mean = cvec(n_data);
  info.demap_var = rvec(n_data);
  info.symbol_pmf.resize(n_data);
  std::vector<SymbolPmf> channel_pmf(n_data);
  for (int d = 0; d < n_data; ++d) {
    const int idx = sys.data_indices[d] - 1;
    cplx m;
    double v;
    channel_pmf[d] =
        demap_message(y[idx], h_mean[idx], h_second[idx], beta, &m, &v);
    info.demap_mean[d] = m;
    info.demap_var[d] = v;
  }

  std::vector<double> priors(n_coded, 0.0);  // interleaved domain
  Bcjr::Result dec;
  for (int it = 0; it < std::max(1, n_bp_iters); ++it) {
    std::vector<double> ext_map(n_coded);
    for (int d = 0; d < n_data; ++d) {
      const auto bits = mapper_to_bits(channel_pmf[d], priors.data() + d * q_bits);
      for (int q = 0; q < q_bits; ++q) ext_map[d * q_bits + q] = bits[q];
    }
    std::vector<double> chan_llr(n_coded);
    for (size_t i = 0; i < n_coded; ++i) chan_llr[perm[i]] = ext_map[i];
    dec = bcjr.decode(chan_llr);
    for (size_t i = 0; i < n_coded; ++i) priors[i] = dec.coded_extrinsic_llr[perm[i]];
  }

  info.coded_llr = priors;
  info.symbol_mean = cvec(n_data);
  info.symbol_second = rvec(n_data);
  for (int d = 0; d < n_data; ++d) {
    const SymbolPmf bp_msg = mapper_to_symbol(priors.data() + d * q_bits);
    cplx m;
    double m2;
    info.symbol_pmf[d] = symbol_beliefs(channel_pmf[d], bp_msg, &m, &m2);
    info.symbol_mean[d] = m;
    info.symbol_second[d] = m2;
  }

  const int k_info = static_cast<int>(dec.info_posterior_llr.size()) - bcjr.memory();
  info.info_llr.assign(dec.info_posterior_llr.begin(),
                       dec.info_posterior_llr.begin() + k_info);
  info.info_bits_hat.resize(k_info);
  for (int k = 0; k < k_info; ++k)
    info.info_bits_hat[k] = info.info_llr[k] < 0.0 ? 1 : 0;
  return info;
}

SymbolMoments moments_from_soft_info(const SystemConfig& sys,
                                     const cvec& pilot_values,
                                     const SoftInfo& info,
                                     bool ignore_pilots) {
  const int n = sys.n_subcarriers;
  SymbolMoments m;
  m.mean = cvec::Zero(n);
  m.second = rvec::Zero(n);
  m.factor_mask.assign(n, 0);
  for (int d = 0; d < sys.n_data(); ++d) {
    const int idx = sys.data_indices[d] - 1;
    m.mean[idx] = info.symbol_mean[d];
    m.second[idx] = info.symbol_second[d];
    m.factor_mask[idx] = 1;
  }
  if (!ignore_pilots) {
    for (int p = 0; p < sys.n_pilots(); ++p) {
      const int idx = sys.pilot_indices[p] - 1;
      m.mean[idx] = pilot_values[p];
      m.second[idx] = std::norm(pilot_values[p]);
      m.factor_mask[idx] = 1;
    }
  }
  return m;
}

}  // namespace ofdm
