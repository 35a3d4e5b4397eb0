#pragma once

#include <memory>
#include <vector>

#include "ofdm/config.hpp"
#include "ofdm/dictionary.hpp"
#include "ofdm/types.hpp"

namespace ofdm {

// Beliefs of the transmit symbols as seen by the channel estimator. Entries
// outside factor_mask carry no observation factor and must have zero moments.
struct SymbolMoments {
  cvec mean;                         // <x_i>
  rvec second;                       // <|x_i|^2>
  std::vector<uint8_t> factor_mask;  // observation factor present at i

  int n_obs() const;
};

// Pilots carry exact values, data subcarriers carry no factor.
SymbolMoments pilots_only_moments(const SystemConfig& sys, const cvec& pilot_values);
// All symbols known exactly (genie).
SymbolMoments known_symbol_moments(const cvec& symbol_vector);

struct EstimatorState {
  std::vector<uint8_t> active;  // z_l
  std::vector<double> delays;   // tau_l
  cvec coeff_mean;              // mu_l, zero when inactive
  rvec coeff_var;               // sigma^2_l, zero when inactive
  double act_prob = 0.5;        // rho
  double comp_var = 1.0;        // eta
  double noise_var = 1.0;       // beta
  cvec residual;                // r = <X>^H y - <X^H X> Psi_A mu_A

  int n_active() const;
  std::vector<int> active_list() const;
};

// Sparse channel estimator operating on one OFDM symbol: incremental
// activation, Newton delay refinement, joint coefficient solves and ML
// parameter updates.
class SparseChannelEstimator {
 public:
  struct Options {
    int max_inner_iters = 50;
    double inner_tol = 1e-3;
    int grid_oversampling = 8;
    int n_components_max = 0;  // 0 -> L = N
    double cg_tol = 1e-9;
    int direct_solve_max = 0;  // 0 -> ceil(sqrt(N)); direct solve when L_hat <= this
  };

  SparseChannelEstimator(const SystemConfig& sys, const Options& opts);

  // Fresh state: beta = ||y||^2/N, eta = 1, rho = 0.5, all inactive.
  void reset(const cvec& y, const SymbolMoments& moments);
  // New symbol beliefs between outer iterations; state carries over.
  void set_moments(const SymbolMoments& moments);
  // rho held fixed while true (first outer iteration).
  void set_freeze_act_prob(bool freeze) { freeze_act_prob_ = freeze; }

  void coeff_update(int l);
  void delay_refine(int l);
  static bool activation_test(cplx mu, double var, double eta, double rho);
  // Returns true if the trial component was kept.
  bool activate_component();
  void update_params();
  void joint_coeff_solve();
  void deactivate(int l);
  // Runs the full inner loop; returns iterations used.
  int inner_loop();

  void channel_posterior(cvec& mean, rvec& second) const;
  // MF part of the free energy (constants independent of the state dropped).
  double rbfe_mf() const;

  const EstimatorState& state() const { return state_; }
  EstimatorState& mutable_state() { return state_; }
  cvec recompute_residual() const;
  // Expected squared observation error under current beliefs.
  double expected_residual_power() const;

  int n_components() const { return n_components_; }
  const SystemConfig& system() const { return sys_; }

 private:
  double s_value() const;  // beta^-1 sum <|x_n|^2>
  void refresh_observation_terms();
  void solve_direct(const std::vector<int>& act);

  const SystemConfig& sys_;
  Options opts_;
  int n_components_;
  bool freeze_act_prob_ = false;

  cvec y_;
  SymbolMoments moments_;
  cvec xh_y_;            // <X>^H y
  double sum_weights_ = 0.0;
  double sum_y2_masked_ = 0.0;
  int n_obs_ = 0;

  EstimatorState state_;
  std::unique_ptr<Periodogram> periodogram_;
};

}  // namespace ofdm
