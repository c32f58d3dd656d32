#include "resdet/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "resdet/error.hpp"

namespace resdet {
namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Power series, valid and fast for x < s + 1.
double lower_gamma_series(double s, double x) {
  double term = 1.0 / s;
  double sum = term;
  double ap = s;
  for (int i = 0; i < 10000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

// Modified Lentz continued fraction for Q(s, x), valid for x >= s + 1.
double upper_gamma_fraction(double s, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + s * std::log(x) - std::lgamma(s)) * h;
}

void check_filter_args(double step, double cutoff) {
  if (!(cutoff > 0.0) || !std::isfinite(cutoff)) {
    fail(ErrorCode::DomainError, "cut-off frequency must be positive");
  }
  if (!(step > 0.0) || !std::isfinite(step)) {
    fail(ErrorCode::NonPositiveStep, "sample step must be positive");
  }
  if (!(step * cutoff < 0.5)) {
    fail(ErrorCode::DomainError, "tau * cutoff must be below 0.5 for the Euler filter");
  }
}

Matrix checked_inverse(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    fail(ErrorCode::DimensionMismatch, "covariance must be square and non-empty");
  }
  if (!is_symmetric(m, 1e-10)) fail(ErrorCode::DomainError, "covariance is not symmetric");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::SingularResidualCovariance, "covariance is not positive definite");
  }
  Matrix inv = llt.solve(Matrix::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

double reg_lower_gamma(double s, double x) {
  if (!(s > 0.0) || !(x >= 0.0) || std::isnan(x)) {
    fail(ErrorCode::DomainError, "reg_lower_gamma requires s > 0 and x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < s + 1.0) return std::min(1.0, lower_gamma_series(s, x));
  return std::max(0.0, 1.0 - upper_gamma_fraction(s, x));
}

double inv_reg_lower_gamma(double y, double s) {
  if (!(s > 0.0)) fail(ErrorCode::DomainError, "shape must be positive");
  if (!(y >= 0.0 && y < 1.0)) fail(ErrorCode::DomainError, "probability must lie in [0, 1)");
  if (y == 0.0) return 0.0;

  double lo = 0.0;
  double hi = std::max(1.0, s);
  while (reg_lower_gamma(s, hi) < y) {
    lo = hi;
    hi *= 2.0;
  }

  const double log_norm = std::lgamma(s);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = reg_lower_gamma(s, x) - y;
    if (std::abs(f) <= 1e-14) break;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double density = std::exp((s - 1.0) * std::log(x) - x - log_norm);
    double next = density > 0.0 ? x - f / density : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, x)) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

double tune_threshold(double rate, int sensors) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    fail(ErrorCode::DomainError, "false-alarm rate must lie in (0, 1]");
  }
  if (sensors < 1) fail(ErrorCode::DomainError, "sensor count must be at least 1");
  return 2.0 * inv_reg_lower_gamma(1.0 - rate, 0.5 * sensors);
}

double chi2_cdf(double z, double dof) {
  if (z <= 0.0) return 0.0;
  return reg_lower_gamma(0.5 * dof, 0.5 * z);
}

double chi2_distance(const Vector& r, const Matrix& cov_inv) {
  return r.dot(cov_inv * r);
}

ChiSquaredDetector::ChiSquaredDetector(const Matrix& residual_cov, double alpha)
    : cov_inv_(checked_inverse(residual_cov)), alpha_(alpha) {
  if (!(alpha >= 0.0)) fail(ErrorCode::DomainError, "threshold must be non-negative");
}

ButterworthMatrices butterworth_matrices(double cutoff) {
  if (!(cutoff > 0.0) || !std::isfinite(cutoff)) {
    fail(ErrorCode::DomainError, "cut-off frequency must be positive");
  }
  ButterworthMatrices out;
  out.Phi << 0.0, 1.0, -cutoff * cutoff, -kSqrt2 * cutoff;
  out.Psi << 0.0, cutoff * cutoff;
  return out;
}

ButterworthBank::ButterworthBank(double cutoff, double step, Eigen::Index channels)
    : cutoff_(cutoff), step_(step) {
  check_filter_args(step, cutoff);
  if (channels < 1) fail(ErrorCode::DimensionMismatch, "filter bank needs at least one channel");
  const auto m = butterworth_matrices(cutoff);
  Phi_d_ = Eigen::Matrix2d::Identity() + m.Phi * step;
  Psi_d_ = m.Psi * step;
  state_.setZero(2, channels);
  out_.setZero(channels);
}

const Vector& ButterworthBank::step(const Vector& r) {
  if (r.size() != state_.cols()) fail(ErrorCode::DimensionMismatch, "residual size mismatch");
  for (Eigen::Index i = 0; i < state_.cols(); ++i) {
    const double s0 = state_(0, i);
    const double s1 = state_(1, i);
    state_(0, i) = Phi_d_(0, 0) * s0 + Phi_d_(0, 1) * s1 + Psi_d_(0) * r[i];
    state_(1, i) = Phi_d_(1, 0) * s0 + Phi_d_(1, 1) * s1 + Psi_d_(1) * r[i];
    out_[i] = state_(0, i);
  }
  return out_;
}

double ButterworthBank::step_scalar(double r) {
  if (state_.cols() != 1) fail(ErrorCode::DimensionMismatch, "scalar step on a multi-channel bank");
  const double s0 = state_(0, 0);
  const double s1 = state_(1, 0);
  state_(0, 0) = Phi_d_(0, 0) * s0 + Phi_d_(0, 1) * s1 + Psi_d_(0) * r;
  state_(1, 0) = Phi_d_(1, 0) * s0 + Phi_d_(1, 1) * s1 + Psi_d_(1) * r;
  out_[0] = state_(0, 0);
  return out_[0];
}

void ButterworthBank::reset() {
  state_.setZero();
  out_.setZero();
}

Matrix filtered_covariance_closed_form(const Matrix& residual_cov, double step, double cutoff) {
  check_filter_args(step, cutoff);
  return (step * cutoff / (2.0 * kSqrt2)) * residual_cov;
}

double filtered_scale_exact(double x) {
  if (!(x > 0.0 && x < 0.5)) fail(ErrorCode::DomainError, "tau * cutoff must lie in (0, 0.5)");
  const double num = x * x - kSqrt2 * x + 2.0;
  const double den = x * x * x - 3.0 * kSqrt2 * x * x + 8.0 * x - 4.0 * kSqrt2;
  return -x * num / den;
}

Matrix filtered_covariance_exact(const Matrix& residual_cov, double step, double cutoff) {
  check_filter_args(step, cutoff);
  return filtered_scale_exact(step * cutoff) * residual_cov;
}

double filtered_distance(const Vector& rho, const Matrix& residual_cov_inv, double step,
                         double cutoff) {
  return (2.0 * kSqrt2 / (step * cutoff)) * rho.dot(residual_cov_inv * rho);
}

FilteredChiSquaredDetector::FilteredChiSquaredDetector(const Matrix& residual_cov, double alpha,
                                                       double cutoff, double step,
                                                       FilteredCovarianceMode mode)
    : bank_(cutoff, step, residual_cov.rows()), alpha_(alpha), mode_(mode) {
  if (!(alpha >= 0.0)) fail(ErrorCode::DomainError, "threshold must be non-negative");
  filtered_cov_ = mode == FilteredCovarianceMode::ClosedForm
                      ? filtered_covariance_closed_form(residual_cov, step, cutoff)
                      : filtered_covariance_exact(residual_cov, step, cutoff);
  filtered_cov_inv_ = checked_inverse(filtered_cov_);
}

double FilteredChiSquaredDetector::update(const Vector& r) {
  return chi2_distance(bank_.step(r), filtered_cov_inv_);
}

double calibrate_af(std::span<const double> yf, double settle_time, double step) {
  if (!(step > 0.0)) fail(ErrorCode::NonPositiveStep, "sample step must be positive");
  if (!(settle_time >= 0.0)) fail(ErrorCode::DomainError, "settle time must be non-negative");
  double peak = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < yf.size(); ++k) {
    if (static_cast<double>(k) * step > settle_time) {
      peak = std::max(peak, std::abs(yf[k]));
      any = true;
    }
  }
  if (!any) fail(ErrorCode::TraceTooShort, "trace ends before the settle time");
  return peak;
}

double predict_yf(double delta, double delta_dot, double delta_ddot, double a, double b) {
  return delta_ddot + a * delta + b * delta_dot;
}

double reconstruct_constant_attack(double yf_steady, double a) {
  if (a == 0.0) fail(ErrorCode::ZeroPlantParameter, "plant parameter a is zero");
  return yf_steady / a;
}

YfDetector::YfDetector(double alpha_f, double cutoff, double step)
    : alpha_f_(alpha_f), bank_(cutoff, step, 1) {}

}  // namespace resdet
