#include "resdet/statespace.hpp"

#include <cmath>
#include <sstream>

#include "resdet/error.hpp"
#include "resdet/estimation.hpp"

namespace resdet {
namespace {

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << name << " is " << shape(m) << ", expected " << rows << "x" << cols;
    fail(ErrorCode::DimensionMismatch, os.str());
  }
}

}  // namespace

const PlantModel& validate_model(const PlantModel& model) {
  const auto n = model.A.rows();
  const auto m = model.B.cols();
  const auto p = model.C.rows();
  if (n == 0 || m == 0 || p == 0) fail(ErrorCode::DimensionMismatch, "empty A, B or C");
  expect_shape(model.A, n, n, "A");
  expect_shape(model.B, n, m, "B");
  expect_shape(model.C, p, n, "C");
  expect_shape(model.K, m, n, "K");
  expect_shape(model.L, n, p, "L");
  expect_shape(model.noise_cov, p, p, "noise covariance");
  if (!model.A.allFinite() || !model.B.allFinite() || !model.C.allFinite() ||
      !model.K.allFinite() || !model.L.allFinite() || !model.noise_cov.allFinite()) {
    fail(ErrorCode::DomainError, "model contains non-finite entries");
  }

  if (!is_psd(model.noise_cov)) {
    fail(ErrorCode::NonPSDNoise, "noise covariance is not symmetric positive semidefinite");
  }
  if (!is_hurwitz(model.A + model.B * model.K)) {
    fail(ErrorCode::UnstableClosedLoop, "A + BK has an eigenvalue with Re >= 0");
  }
  if (!is_hurwitz(model.A - model.L * model.C)) {
    fail(ErrorCode::UnstableClosedLoop, "A - LC has an eigenvalue with Re >= 0");
  }
  return model;
}

Matrix continuous_noise_intensity(const PlantModel& model, double step) {
  if (!(step > 0.0)) fail(ErrorCode::NonPositiveStep, "step must be positive");
  return model.noise_cov / step;
}

namespace detail {

bool residual_cov_singular(const Matrix& residual_cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(residual_cov, Eigen::EigenvaluesOnly);
  const double hi = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double lo = eig.eigenvalues().minCoeff();
  return !(hi > 0.0) || lo <= 1e-10 * hi;
}

DiscreteClosedLoop discretize_unchecked(const PlantModel& model, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    fail(ErrorCode::NonPositiveStep, "step must be positive and finite");
  }
  validate_model(model);

  const auto n = model.n();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix observer = model.A - model.L * model.C;

  DiscreteClosedLoop loop;
  loop.step = step;
  loop.F = I + (model.A + model.B * model.K) * step;
  loop.G = -model.B * model.K * step;
  loop.H = I + observer * step;
  loop.L_d = model.L * step;
  loop.noise_cov = model.noise_cov;

  // Continuous error covariance with R = Sigma_eta / tau, then Sigma_e = tau P.
  const Matrix R = continuous_noise_intensity(model, step);
  const Matrix forcing = model.L * R * model.L.transpose();
  const Matrix P = solve_lyapunov_continuous(observer, 0.5 * (forcing + forcing.transpose()));
  loop.error_cov = step * P;
  loop.residual_cov = model.C * loop.error_cov * model.C.transpose() + model.noise_cov;
  loop.residual_cov = 0.5 * (loop.residual_cov + loop.residual_cov.transpose());
  return loop;
}

}  // namespace detail

DiscreteClosedLoop discretize(const PlantModel& model, double step) {
  DiscreteClosedLoop loop = detail::discretize_unchecked(model, step);
  if (detail::residual_cov_singular(loop.residual_cov)) {
    fail(ErrorCode::SingularResidualCovariance, "residual covariance is not invertible");
  }
  return loop;
}

NoiseSampler::NoiseSampler(const Matrix& cov) {
  if (!is_psd(cov)) fail(ErrorCode::NonPSDNoise, "noise covariance is not PSD");
  sqrt_cov_ = sqrt_psd(cov);
  zero_ = sqrt_cov_.cwiseAbs().maxCoeff() == 0.0;
  scratch_.resize(cov.rows());
}

void NoiseSampler::sample(Rng& rng, Vector& out) {
  out.resize(sqrt_cov_.rows());
  if (zero_) {
    out.setZero();
    return;
  }
  for (Eigen::Index i = 0; i < scratch_.size(); ++i) scratch_[i] = normal_(rng);
  out.noalias() = sqrt_cov_ * scratch_;
}

Vector NoiseSampler::sample(Rng& rng) {
  Vector out;
  sample(rng, out);
  return out;
}

Vector sample_noise(const Matrix& cov, Rng& rng) {
  NoiseSampler sampler(cov);
  return sampler.sample(rng);
}

}  // namespace resdet
