#pragma once

#include <vector>

#include <fftw3.h>

#include "ofdm/types.hpp"

namespace ofdm {

// Delay-domain steering vector, [psi(tau)]_n = exp(-j 2 pi df n tau), n=1..N.
cvec steering(int n, double spacing, double tau);

// Columns psi(tau_l) for each delay.
cmat steering_matrix(int n, double spacing, const std::vector<double>& delays);

// psi^H(tau1) diag(d) psi(tau2), direct summation.
cplx weighted_gram(int n, double spacing, double tau1, double tau2,
                   const rvec& d);

struct ObjectiveDerivs {
  double g;    // |psi^H(tau) r|^2
  double g1;   // d/dtau
  double g2;   // d^2/dtau^2
};

// Analytic derivatives of f(tau) = |psi^H(tau) r|^2 via closed-form sums.
ObjectiveDerivs objective_derivs(double spacing, const cvec& r, double tau);

// Periodogram |psi^H(tau) r|^2 evaluated on the equispaced delay grid
// [-(1/2)/(N df), t_max] with spacing (N df)^-1 / oversampling, via a
// zero-padded FFT of length oversampling*N. Owns an FFTW plan; one instance
// per thread.
class Periodogram {
 public:
  Periodogram(int n, double spacing, double t_max, int oversampling);
  ~Periodogram();
  Periodogram(const Periodogram&) = delete;
  Periodogram& operator=(const Periodogram&) = delete;

  // Returns the maximizing grid delay; optionally fills all grid values.
  double peak(const cvec& r, std::vector<double>* values = nullptr,
              std::vector<double>* delays = nullptr);

  int grid_size() const { return k_max_ - k_min_ + 1; }
  double grid_step() const { return step_; }

 private:
  int n_;
  double spacing_;
  int m_;      // FFT length
  int k_min_;  // grid indices k, tau_k = k * step_
  int k_max_;
  double step_;
  fftw_complex* buf_in_;
  fftw_complex* buf_out_;
  fftw_plan plan_;
};

}  // namespace ofdm
