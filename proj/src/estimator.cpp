#include "ofdm/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ofdm/linear_solver.hpp"

namespace ofdm {

int SymbolMoments::n_obs() const {
  return static_cast<int>(std::count(factor_mask.begin(), factor_mask.end(), 1));
}

SymbolMoments pilots_only_moments(const SystemConfig& sys, const cvec& pilot_values) {
  const int n = sys.n_subcarriers;
  SymbolMoments m;
  m.mean = cvec::Zero(n);
  m.second = rvec::Zero(n);
  m.factor_mask.assign(n, 0);
  for (int p = 0; p < sys.n_pilots(); ++p) {
    const int idx = sys.pilot_indices[p] - 1;
    m.mean[idx] = pilot_values[p];
    m.second[idx] = std::norm(pilot_values[p]);
    m.factor_mask[idx] = 1;
  }
  return m;
}

SymbolMoments known_symbol_moments(const cvec& symbol_vector) {
  const int n = static_cast<int>(symbol_vector.size());
  SymbolMoments m;
  m.mean = symbol_vector;
  m.second = symbol_vector.cwiseAbs2();
  m.factor_mask.assign(n, 1);
  return m;
}

int EstimatorState::n_active() const {
  return static_cast<int>(std::count(active.begin(), active.end(), 1));
}

std::vector<int> EstimatorState::active_list() const {
  std::vector<int> out;
  for (size_t l = 0; l < active.size(); ++l)
    if (active[l]) out.push_back(static_cast<int>(l));
  return out;
}

SparseChannelEstimator::SparseChannelEstimator(const SystemConfig& sys,
                                               const Options& opts)
    : sys_(sys), opts_(opts) {
  n_components_ = opts.n_components_max > 0
                      ? std::min(opts.n_components_max, sys.n_subcarriers)
                      : sys.n_subcarriers;
  if (opts_.direct_solve_max == 0)
    opts_.direct_solve_max =
        static_cast<int>(std::ceil(std::sqrt(static_cast<double>(sys.n_subcarriers))));
  periodogram_ = std::make_unique<Periodogram>(
      sys.n_subcarriers, sys.subcarrier_spacing, sys.cyclic_prefix,
      opts.grid_oversampling);
}

void SparseChannelEstimator::refresh_observation_terms() {
  const int n = sys_.n_subcarriers;
  xh_y_ = moments_.mean.conjugate().cwiseProduct(y_);
  sum_weights_ = moments_.second.sum();
  sum_y2_masked_ = 0.0;
  n_obs_ = 0;
  for (int i = 0; i < n; ++i) {
    if (moments_.factor_mask[i]) {
      sum_y2_masked_ += std::norm(y_[i]);
      ++n_obs_;
    }
  }
  if (n_obs_ == 0) throw std::invalid_argument("no observation factors");
}

void SparseChannelEstimator::reset(const cvec& y, const SymbolMoments& moments) {
  y_ = y;
  moments_ = moments;
  refresh_observation_terms();
  const int L = n_components_;
  state_.active.assign(L, 0);
  state_.delays.assign(L, 0.0);
  state_.coeff_mean = cvec::Zero(L);
  state_.coeff_var = rvec::Zero(L);
  state_.act_prob = 0.5;
  state_.comp_var = 1.0;
  state_.noise_var = y.squaredNorm() / sys_.n_subcarriers;
  state_.residual = xh_y_;
}

void SparseChannelEstimator::set_moments(const SymbolMoments& moments) {
  moments_ = moments;
  refresh_observation_terms();
  state_.residual = recompute_residual();
}

cvec SparseChannelEstimator::recompute_residual() const {
  cvec wh = cvec::Zero(sys_.n_subcarriers);
  for (int l : state_.active_list()) {
    wh += state_.coeff_mean[l] *
          steering(sys_.n_subcarriers, sys_.subcarrier_spacing, state_.delays[l]);
  }
  return xh_y_ - moments_.second.asDiagonal() * wh;
}

double SparseChannelEstimator::s_value() const {
  return sum_weights_ / state_.noise_var;
}

void SparseChannelEstimator::coeff_update(int l) {
  if (!state_.active[l]) throw std::invalid_argument("coeff_update on inactive component");
  const cvec psi =
      steering(sys_.n_subcarriers, sys_.subcarrier_spacing, state_.delays[l]);
  const cvec wpsi = moments_.second.asDiagonal() * psi;
  cvec r_excl = state_.residual + state_.coeff_mean[l] * wpsi;
  const double s = s_value();
  const cplx q = psi.dot(r_excl) / state_.noise_var;
  const double var = 1.0 / (s + 1.0 / state_.comp_var);
  state_.coeff_var[l] = var;
  state_.coeff_mean[l] = var * q;
  state_.residual = r_excl - state_.coeff_mean[l] * wpsi;
}

void SparseChannelEstimator::delay_refine(int l) {
  if (!state_.active[l]) throw std::invalid_argument("delay_refine on inactive component");
  const int n = sys_.n_subcarriers;
  const double df = sys_.subcarrier_spacing;
  const double t_cp = sys_.cyclic_prefix;

  const cvec psi_old = steering(n, df, state_.delays[l]);
  const cvec wpsi_old = moments_.second.asDiagonal() * psi_old;
  const cvec r_excl = state_.residual + state_.coeff_mean[l] * wpsi_old;

  double tau = std::clamp(state_.delays[l], 0.0, t_cp);
  const ObjectiveDerivs d0 = objective_derivs(df, r_excl, tau);
  if (d0.g2 != 0.0) {
    double step = d0.g1 / std::abs(d0.g2);
    for (int halvings = 0; halvings < 60; ++halvings) {
      const double cand = std::clamp(tau + step, 0.0, t_cp);
      if (objective_derivs(df, r_excl, cand).g >= d0.g) {
        tau = cand;
        break;
      }
      step *= 0.5;
    }
  }
  state_.delays[l] = tau;

  const cvec psi = steering(n, df, tau);
  const cvec wpsi = moments_.second.asDiagonal() * psi;
  const double s = s_value();
  const cplx q = psi.dot(r_excl) / state_.noise_var;
  const double var = 1.0 / (s + 1.0 / state_.comp_var);
  state_.coeff_var[l] = var;
  state_.coeff_mean[l] = var * q;
  state_.residual = r_excl - state_.coeff_mean[l] * wpsi;
}

bool SparseChannelEstimator::activation_test(cplx mu, double var, double eta,
                                             double rho) {
  return std::norm(mu) / var >
         std::log(eta / var) + std::log((1.0 - rho) / rho);
}

void SparseChannelEstimator::deactivate(int l) {
  if (!state_.active[l]) return;
  const cvec psi =
      steering(sys_.n_subcarriers, sys_.subcarrier_spacing, state_.delays[l]);
  state_.residual += state_.coeff_mean[l] * (moments_.second.asDiagonal() * psi);
  state_.active[l] = 0;
  state_.coeff_mean[l] = 0.0;
  state_.coeff_var[l] = 0.0;
}

bool SparseChannelEstimator::activate_component() {
  const int L = n_components_;
  int l = -1;
  for (int k = 0; k < L; ++k)
    if (!state_.active[k]) { l = k; break; }
  if (l < 0) return false;  // inactive set empty

  const cvec mu_saved = state_.coeff_mean;
  const rvec var_saved = state_.coeff_var;
  const cvec res_saved = state_.residual;
  const double f_prev = rbfe_mf();

  state_.active[l] = 1;
  state_.delays[l] = periodogram_->peak(state_.residual);
  joint_coeff_solve();
  delay_refine(l);

  // The local test compares against the intermediate state after the joint
  // solve; the explicit free-energy check guards the pre-activation state.
  if (!activation_test(state_.coeff_mean[l], state_.coeff_var[l],
                       state_.comp_var, state_.act_prob) ||
      rbfe_mf() > f_prev + 1e-12 * std::max(1.0, std::abs(f_prev))) {
    state_.active[l] = 0;
    state_.coeff_mean = mu_saved;
    state_.coeff_var = var_saved;
    state_.residual = res_saved;
    return false;
  }
  return true;
}

void SparseChannelEstimator::solve_direct(const std::vector<int>& act) {
  const int lh = static_cast<int>(act.size());
  std::vector<double> delays(lh);
  for (int k = 0; k < lh; ++k) delays[k] = state_.delays[act[k]];
  const cmat psi =
      steering_matrix(sys_.n_subcarriers, sys_.subcarrier_spacing, delays);
  const double ib = 1.0 / state_.noise_var;
  cmat q_mat = ib * (psi.adjoint() * (moments_.second.asDiagonal() * psi));
  q_mat.diagonal().array() += 1.0 / state_.comp_var;
  const cvec p = ib * (psi.adjoint() * xh_y_);
  const cvec mu = q_mat.ldlt().solve(p);
  for (int k = 0; k < lh; ++k) state_.coeff_mean[act[k]] = mu[k];
}

void SparseChannelEstimator::joint_coeff_solve() {
  const std::vector<int> act = state_.active_list();
  if (act.empty()) {
    state_.residual = xh_y_;
    return;
  }
  const int lh = static_cast<int>(act.size());
  const bool weights_positive = (moments_.second.array() > 0.0).all();

  bool solved = false;
  if (lh > opts_.direct_solve_max && weights_positive) {
    WoodburySystem wsys;
    wsys.dict_delays.resize(lh);
    for (int k = 0; k < lh; ++k) wsys.dict_delays[k] = state_.delays[act[k]];
    wsys.weights = moments_.second;
    wsys.noise_var = state_.noise_var;
    wsys.comp_var = state_.comp_var;
    const int max_iters =
        4 * static_cast<int>(std::ceil(std::sqrt(static_cast<double>(sys_.n_subcarriers))));
    WoodburyResult res =
        mu_via_woodbury(wsys, sys_.subcarrier_spacing, xh_y_, opts_.cg_tol, max_iters);
    if (res.converged) {
      for (int k = 0; k < lh; ++k) state_.coeff_mean[act[k]] = res.mu[k];
      solved = true;
    }
  }
  if (!solved) solve_direct(act);

  const double var = 1.0 / (s_value() + 1.0 / state_.comp_var);
  for (int l : act) state_.coeff_var[l] = var;

  cvec wh = cvec::Zero(sys_.n_subcarriers);
  for (int l : act) {
    wh += state_.coeff_mean[l] *
          steering(sys_.n_subcarriers, sys_.subcarrier_spacing, state_.delays[l]);
  }
  state_.residual = xh_y_ - moments_.second.asDiagonal() * wh;
}

double SparseChannelEstimator::expected_residual_power() const {
  const std::vector<int> act = state_.active_list();
  double u = sum_y2_masked_;
  if (!act.empty()) {
    cvec t = cvec::Zero(sys_.n_subcarriers);
    double var_sum = 0.0;
    for (int l : act) {
      t += state_.coeff_mean[l] *
           steering(sys_.n_subcarriers, sys_.subcarrier_spacing, state_.delays[l]);
      var_sum += state_.coeff_var[l];
    }
    u += moments_.second.cwiseProduct(t.cwiseAbs2()).sum();
    u += var_sum * sum_weights_;
    u -= 2.0 * std::real(xh_y_.dot(t));
  }
  return u;
}

void SparseChannelEstimator::update_params() {
  const int L = n_components_;
  const int lh = state_.n_active();
  if (!freeze_act_prob_) {
    const double lo = 1.0 / L;
    state_.act_prob = std::clamp(static_cast<double>(lh) / L, lo, 1.0 - lo);
  }
  if (lh > 0) {
    double acc = 0.0;
    for (int l : state_.active_list())
      acc += std::norm(state_.coeff_mean[l]) + state_.coeff_var[l];
    state_.comp_var = acc / lh;
  }
  state_.noise_var = expected_residual_power() / n_obs_;
}

int SparseChannelEstimator::inner_loop() {
  state_.residual = recompute_residual();
  double prev_inv_beta = 1.0 / state_.noise_var;
  int iters = 0;
  for (int t = 0; t < opts_.max_inner_iters; ++t) {
    ++iters;
    joint_coeff_solve();
    activate_component();
    for (int l : state_.active_list()) {
      delay_refine(l);
      if (!activation_test(state_.coeff_mean[l], state_.coeff_var[l],
                           state_.comp_var, state_.act_prob)) {
        deactivate(l);
      }
    }
    joint_coeff_solve();
    update_params();
    const double inv_beta = 1.0 / state_.noise_var;
    const bool converged = std::abs(inv_beta - prev_inv_beta) < opts_.inner_tol * prev_inv_beta;
    prev_inv_beta = inv_beta;
    if (converged) break;
  }
  return iters;
}

void SparseChannelEstimator::channel_posterior(cvec& mean, rvec& second) const {
  const int n = sys_.n_subcarriers;
  mean = cvec::Zero(n);
  double var_sum = 0.0;
  for (int l : state_.active_list()) {
    mean += state_.coeff_mean[l] *
            steering(n, sys_.subcarrier_spacing, state_.delays[l]);
    var_sum += state_.coeff_var[l];
  }
  second = mean.cwiseAbs2().array() + var_sum;
}

double SparseChannelEstimator::rbfe_mf() const {
  const double rho = state_.act_prob;
  if (rho <= 0.0 || rho >= 1.0)
    throw std::invalid_argument("rbfe_mf requires 0 < rho < 1");
  const double beta = state_.noise_var;
  const double eta = state_.comp_var;
  const int L = n_components_;
  const int lh = state_.n_active();

  double f = n_obs_ * std::log(kPi * beta) + expected_residual_power() / beta;
  for (int l : state_.active_list()) {
    f += std::log(eta / state_.coeff_var[l]) - 1.0 +
         (std::norm(state_.coeff_mean[l]) + state_.coeff_var[l]) / eta -
         std::log(rho);
  }
  f -= (L - lh) * std::log(1.0 - rho);
  return f;
}

}  // namespace ofdm
