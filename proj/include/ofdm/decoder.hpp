#pragma once

#include <array>
#include <vector>

#include "ofdm/config.hpp"
#include "ofdm/tx_chain.hpp"
#include "ofdm/types.hpp"

namespace ofdm {

// LLR convention throughout: L = ln P(b=0) - ln P(b=1), clamped to +-60.
inline constexpr double kLlrClamp = 60.0;

using SymbolPmf = std::vector<double>;  // over the data alphabet

struct SoftInfo {
  cvec demap_mean;                  // per data subcarrier
  rvec demap_var;
  std::vector<SymbolPmf> symbol_pmf;  // q(x_i)
  std::vector<double> coded_llr;      // extrinsic, interleaved domain
  std::vector<double> info_llr;       // posterior, length K
  BitVec info_bits_hat;               // length K
  cvec symbol_mean;                   // <x_i> per data subcarrier
  rvec symbol_second;                 // <|x_i|^2>
};

// Gaussian channel message evaluated on the data alphabet: pmf over A_D
// proportional to exp(-|x - m|^2 / v) with m = y <h>^* / <|h|^2>,
// v = beta / <|h|^2>. Zero channel information gives a uniform pmf.
SymbolPmf demap_message(cplx y, cplx h_mean, double h_second, double beta,
                        cplx* mean_out = nullptr, double* var_out = nullptr);

// Log-domain BCJR over the terminated trellis of a rate-1/2 convolutional
// code (zero start and end state).
class Bcjr {
 public:
  explicit Bcjr(const ConvCode& code);

  struct Result {
    std::vector<double> info_posterior_llr;   // per trellis step (incl. tail)
    std::vector<double> coded_extrinsic_llr;  // 2 per step
  };

  // channel_llrs has 2 LLRs per trellis step.
  Result decode(const std::vector<double>& channel_llrs) const;

  int memory() const { return memory_; }

 private:
  int memory_;
  int n_states_;
  std::vector<std::array<int, 2>> next_;  // [state][input] -> state
  std::vector<std::array<int, 2>> out_;   // [state][input] -> packed output pair
};

// Sum-product over the 256-ary mapping factor.
// bit_prior_llr points at Q prior LLRs for the subcarrier's label bits.
SymbolPmf mapper_to_symbol(const double* bit_prior_llr);
// Extrinsic bit LLRs given the channel-side pmf and the other bits' priors.
std::array<double, 8> mapper_to_bits(const SymbolPmf& channel_pmf,
                                     const double* bit_prior_llr);

// q(x_i) proportional to channel pmf times mapper message, with moments.
// All-zero product falls back to uniform (counted by uniform_fallbacks).
SymbolPmf symbol_beliefs(const SymbolPmf& channel_pmf, const SymbolPmf& mapper_msg,
                         cplx* mean, double* second, int* uniform_fallbacks = nullptr);

// Full BP-subgraph pass: demap -> mapper -> BCJR -> mapper -> beliefs.
// h_mean/h_second are length-N channel posterior moments; n_bp_iters complete
// forward-backward rounds are run (1 per outer iteration in the receiver).
SoftInfo decode_pass(const cvec& y, const cvec& h_mean, const rvec& h_second,
                     double beta, const SystemConfig& sys, const ConvCode& code,
                     const Bcjr& bcjr, int n_bp_iters = 1);

struct SymbolMoments;

// Symbol beliefs -> estimator moments (pilots exact). When ignore_pilots is
// set the pilot observation factors are dropped (mask 0, zero moments).
SymbolMoments moments_from_soft_info(const SystemConfig& sys,
                                     const cvec& pilot_values,
                                     const SoftInfo& info,
                                     bool ignore_pilots = false);

}  // namespace ofdm
