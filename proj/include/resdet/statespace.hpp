#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "resdet/linalg.hpp"

namespace resdet {

/// Continuous LTI plant x' = Ax + Bu, y = Cx + eta with output feedback
/// u = K xhat (positive sign convention) and a Luenberger observer with
/// gain L. `noise_cov` is the discrete (per-sample) measurement covariance.
struct PlantModel {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix K;
  Matrix L;
  Matrix noise_cov;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index p() const { return C.rows(); }
};

/// Checks dimensions, PSD noise and Hurwitz A+BK / A-LC. Returns the model
/// unchanged on success.
const PlantModel& validate_model(const PlantModel& model);

/// Euler-discretized closed loop in (x, e) coordinates together with the
/// steady-state covariances used by the residual detectors.
struct DiscreteClosedLoop {
  Matrix F;  // I + (A+BK) tau
  Matrix G;  // -BK tau
  Matrix H;  // I + (A-LC) tau
  Matrix L_d;  // L tau
  double step = 0.0;
  Matrix noise_cov;
  Matrix error_cov;
  Matrix residual_cov;
};

DiscreteClosedLoop discretize(const PlantModel& model, double step);

namespace detail {
/// discretize() without the residual-covariance invertibility check; used
/// by the simulator, which degrades gracefully for noise-free runs.
DiscreteClosedLoop discretize_unchecked(const PlantModel& model, double step);
bool residual_cov_singular(const Matrix& residual_cov);
}  // namespace detail

/// Continuous noise intensity R = Sigma_eta / tau implied by the discrete
/// covariance. Reporting only.
Matrix continuous_noise_intensity(const PlantModel& model, double step);

/// Deterministic generator used for every random draw in a run.
using Rng = std::mt19937_64;

/// Gaussian sampler with a cached symmetric square root of its covariance.
class NoiseSampler {
 public:
  explicit NoiseSampler(const Matrix& cov);

  /// Draws into `out` (resized as needed) without heap allocation once sized.
  void sample(Rng& rng, Vector& out);
  Vector sample(Rng& rng);

  const Matrix& sqrt_cov() const { return sqrt_cov_; }

 private:
  Matrix sqrt_cov_;
  Vector scratch_;
  bool zero_ = false;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// One-shot draw eta ~ N(0, cov).
Vector sample_noise(const Matrix& cov, Rng& rng);

}  // namespace resdet
