#include "ofdm/dictionary.hpp"

#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace ofdm {

namespace {
// FFTW plan creation/destruction is not thread-safe; execution is.
std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

cvec steering(int n, double spacing, double tau) {
  cvec psi(n);
  const double w = -2.0 * kPi * spacing * tau;
  for (int k = 0; k < n; ++k) {
    const double ph = w * (k + 1);
    psi[k] = cplx(std::cos(ph), std::sin(ph));
  }
  return psi;
}

cmat steering_matrix(int n, double spacing, const std::vector<double>& delays) {
  cmat psi(n, delays.size());
  for (size_t l = 0; l < delays.size(); ++l)
    psi.col(l) = steering(n, spacing, delays[l]);
  return psi;
}

cplx weighted_gram(int n, double spacing, double tau1, double tau2,
                   const rvec& d) {
  if (d.size() != n) throw std::invalid_argument("weight length mismatch");
  const double w = 2.0 * kPi * spacing * (tau1 - tau2);
  cplx acc = 0.0;
  for (int k = 0; k < n; ++k) {
    const double ph = w * (k + 1);
    acc += d[k] * cplx(std::cos(ph), std::sin(ph));
  }
  return acc;
}

ObjectiveDerivs objective_derivs(double spacing, const cvec& r, double tau) {
  const int n = static_cast<int>(r.size());
  const double w = 2.0 * kPi * spacing * tau;
  cplx a = 0.0, a1 = 0.0, a2 = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double ph = w * k;
    const cplx e(std::cos(ph), std::sin(ph));  // exp(+j 2 pi df k tau)
    const cplx term = r[k - 1] * e;
    const double c = 2.0 * kPi * spacing * k;
    a += term;
    a1 += cplx(0.0, c) * term;
    a2 += -c * c * term;
  }
  ObjectiveDerivs out;
  out.g = std::norm(a);
  out.g1 = 2.0 * std::real(a1 * std::conj(a));
  out.g2 = 2.0 * std::real(a2 * std::conj(a)) + 2.0 * std::norm(a1);
  return out;
}

Periodogram::Periodogram(int n, double spacing, double t_max, int oversampling)
    : n_(n), spacing_(spacing) {
  if (n <= 0 || oversampling <= 0) throw std::invalid_argument("bad periodogram size");
  m_ = n * oversampling;
  step_ = 1.0 / (m_ * spacing);
  k_min_ = -(oversampling / 2);  // tau = -(1/2)/(N df)
  k_max_ = static_cast<int>(std::floor(t_max / step_));
  if (k_max_ >= m_ + k_min_) throw std::invalid_argument("grid exceeds FFT period");
  if (k_max_ < k_min_) throw std::invalid_argument("empty grid");
  buf_in_ = fftw_alloc_complex(m_);
  buf_out_ = fftw_alloc_complex(m_);
  std::lock_guard<std::mutex> lock(fftw_plan_mutex());
  plan_ = fftw_plan_dft_1d(m_, buf_in_, buf_out_, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Periodogram::~Periodogram() {
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan_);
  }
  fftw_free(buf_in_);
  fftw_free(buf_out_);
}

double Periodogram::peak(const cvec& r, std::vector<double>* values,
                         std::vector<double>* delays) {
  if (r.size() != n_) throw std::invalid_argument("residual length mismatch");
  std::memset(buf_in_, 0, sizeof(fftw_complex) * m_);
  // Entry n of r multiplies exp(+j 2 pi n k / M); place at FFT input index n.
  for (int k = 0; k < n_; ++k) {
    buf_in_[k + 1][0] = r[k].real();
    buf_in_[k + 1][1] = r[k].imag();
  }
  fftw_execute(plan_);
  double best_val = -1.0;
  int best_k = k_min_;
  if (values) values->clear();
  if (delays) delays->clear();
  for (int k = k_min_; k <= k_max_; ++k) {
    const int idx = (k % m_ + m_) % m_;
    const double re = buf_out_[idx][0];
    const double im = buf_out_[idx][1];
    const double v = re * re + im * im;
    if (values) values->push_back(v);
    if (delays) delays->push_back(k * step_);
    if (v > best_val) { best_val = v; best_k = k; }
  }
  return best_k * step_;
}

}  // namespace ofdm
