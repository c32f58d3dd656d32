#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "resdet/linalg.hpp"

namespace resdet {

// ---------------------------------------------------------------------------
// Chi-squared tuning
// ---------------------------------------------------------------------------

/// Regularized lower incomplete gamma P(s, x) = gamma(s, x) / Gamma(s).
double reg_lower_gamma(double s, double x);

/// x >= 0 with P(s, x) = y, for 0 <= y < 1.
double inv_reg_lower_gamma(double y, double s);

/// Threshold alpha = 2 P^{-1}(1 - rate, p/2) giving false-alarm rate `rate`
/// for a p-sensor chi-squared detector.
double tune_threshold(double rate, int sensors);

/// CDF of the chi-squared distribution with `dof` degrees of freedom.
double chi2_cdf(double z, double dof);

/// z = r' S r.
double chi2_distance(const Vector& r, const Matrix& cov_inv);

/// Strict: alarm iff z > alpha.
inline bool threshold_test(double z, double alpha) { return z > alpha; }

class ChiSquaredDetector {
 public:
  ChiSquaredDetector(const Matrix& residual_cov, double alpha);

  double distance(const Vector& r) const { return chi2_distance(r, cov_inv_); }
  bool alarm(double z) const { return threshold_test(z, alpha_); }

  double alpha() const { return alpha_; }
  const Matrix& cov_inv() const { return cov_inv_; }
  Eigen::Index sensors() const { return cov_inv_.rows(); }

 private:
  Matrix cov_inv_;
  double alpha_;
};

// ---------------------------------------------------------------------------
// Butterworth bank and the filtered chi-squared detector
// ---------------------------------------------------------------------------

struct ButterworthMatrices {
  Eigen::Matrix2d Phi;
  Eigen::Vector2d Psi;
};

/// Second-order Butterworth low-pass in companion form with DC gain one.
ButterworthMatrices butterworth_matrices(double cutoff);

/// p identical second-order filters, Euler-discretized: Phi_d = I + Phi tau,
/// Psi_d = Psi tau. Requires tau * cutoff < 0.5.
class ButterworthBank {
 public:
  ButterworthBank(double cutoff, double step, Eigen::Index channels);

  /// Advances every channel by one sample of `r` and returns the first
  /// filter state of each channel after the update.
  const Vector& step(const Vector& r);
  double step_scalar(double r);

  void reset();

  double cutoff() const { return cutoff_; }
  double sample_step() const { return step_; }
  const Eigen::Matrix2d& Phi_d() const { return Phi_d_; }
  const Eigen::Vector2d& Psi_d() const { return Psi_d_; }
  const Vector& output() const { return out_; }
  Eigen::Index channels() const { return state_.cols(); }

 private:
  double cutoff_;
  double step_;
  Eigen::Matrix2d Phi_d_;
  Eigen::Vector2d Psi_d_;
  Eigen::Matrix<double, 2, Eigen::Dynamic> state_;
  Vector out_;
};

/// Sigma_rho = tau * cutoff / (2 sqrt 2) * Sigma_r.
Matrix filtered_covariance_closed_form(const Matrix& residual_cov, double step, double cutoff);

/// Exact stationary scale of the Euler-discretized filter as a function of
/// x = tau * cutoff.
double filtered_scale_exact(double x);

/// Sigma_rho = filtered_scale_exact(tau * cutoff) * Sigma_r.
Matrix filtered_covariance_exact(const Matrix& residual_cov, double step, double cutoff);

/// z = 2 sqrt 2 / (tau cutoff) * rho' Sigma_r^{-1} rho.
double filtered_distance(const Vector& rho, const Matrix& residual_cov_inv, double step,
                         double cutoff);

enum class FilteredCovarianceMode { ClosedForm, ExactRational };

class FilteredChiSquaredDetector {
 public:
  FilteredChiSquaredDetector(const Matrix& residual_cov, double alpha, double cutoff,
                             double step, FilteredCovarianceMode mode);

  /// Filters r and returns the distance of the updated filter output.
  double update(const Vector& r);

  bool alarm(double z) const { return threshold_test(z, alpha_); }
  const Vector& rho() const { return bank_.output(); }
  const ButterworthBank& bank() const { return bank_; }
  const Matrix& filtered_cov() const { return filtered_cov_; }
  double alpha() const { return alpha_; }
  FilteredCovarianceMode mode() const { return mode_; }

 private:
  ButterworthBank bank_;
  Matrix filtered_cov_;
  Matrix filtered_cov_inv_;
  double alpha_;
  FilteredCovarianceMode mode_;
};

// ---------------------------------------------------------------------------
// Switching-term detector
// ---------------------------------------------------------------------------

/// alpha_f = max |y_f| over samples with t > settle_time.
double calibrate_af(std::span<const double> yf, double settle_time, double step);

/// Non-strict boundary: alarm iff |y_f| > alpha_f.
inline bool yf_detect(double yf, double alpha_f) { return std::abs(yf) > alpha_f; }

/// Steady response of the filtered switching term to a smooth attack.
double predict_yf(double delta, double delta_dot, double delta_ddot, double a, double b);

/// Constant attack level implied by a steady y_f.
double reconstruct_constant_attack(double yf_steady, double a);

class YfDetector {
 public:
  /// alpha_f <= 0 means "not yet calibrated": alarm() then always returns false.
  YfDetector(double alpha_f, double cutoff, double step);

  double update(double switching_term) { return bank_.step_scalar(switching_term); }
  bool alarm(double yf) const { return alpha_f_ > 0.0 && yf_detect(yf, alpha_f_); }

  double alpha_f() const { return alpha_f_; }
  const ButterworthBank& bank() const { return bank_; }

 private:
  double alpha_f_;
  ButterworthBank bank_;
};

}  // namespace resdet
