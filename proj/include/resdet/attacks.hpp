#pragma once

#include <optional>
#include <variant>

#include "resdet/linalg.hpp"
#include "resdet/statespace.hpp"

namespace resdet {

namespace attack {

struct None {};

/// delta = level for t > start_time. A single level is broadcast to every sensor.
struct Constant {
  Vector level;
  double start_time = 0.0;
};

/// delta = amplitude * sin(frequency * t) for t > start_time (no phase reset).
struct Sinusoid {
  Vector amplitude;
  double frequency = 1.0;
  double start_time = 0.0;
};

/// Constant-direction residual shaping: dbar_k = c * d with c = scale * sqrt(alpha).
struct ZeroAlarmPolicy {
  double scale = 1.0;
  std::optional<Vector> direction;  // unit; defaults to normalized all-ones
  /// Relative shrink applied to c so that rounding cannot push z past alpha.
  double margin = 1e-9;
};

enum class MagnitudeLaw {
  /// m^2 ~ (alpha / alpha*(rate)) chi2_p: z mirrors nominal operation.
  ChiSquared,
  /// m = sqrt(alpha)(1 - margin) w.p. 1 - rate, spike_factor sqrt(alpha) w.p. rate.
  TwoPoint,
};

struct HiddenPolicy {
  std::optional<Vector> direction;
  double rate = 0.05;
  MagnitudeLaw law = MagnitudeLaw::ChiSquared;
  double spike_factor = 3.0;
};

struct ZeroAlarm {
  ZeroAlarmPolicy policy;
};

struct Hidden {
  HiddenPolicy policy;
};

/// Against the filtered detector. The residual is shaped with Sigma_rho and
/// the magnitude is further divided by the peak step gain of the discretized
/// filter so that the filter overshoot cannot trip the detector.
/// When `alternating` is set the residual instead flips sign each sample
/// (Nyquist injection), is shaped with the unfiltered Sigma_r, and `scale`
/// may exceed one.
struct FilteredZeroAlarm {
  ZeroAlarmPolicy policy;
  double cutoff = 12.0;
  bool alternating = false;
};

struct FilteredHidden {
  HiddenPolicy policy;
  double cutoff = 12.0;
};

}  // namespace attack

using AttackSpec = std::variant<attack::None, attack::Constant, attack::Sinusoid,
                                attack::ZeroAlarm, attack::Hidden, attack::FilteredZeroAlarm,
                                attack::FilteredHidden>;

/// Short identifier ("none", "constant", ...) used in reports and traces.
const char* attack_id(const AttackSpec& spec);

bool is_stealthy(const AttackSpec& spec);

/// Detector-side information an attacker may hold. Empty fields mean the
/// running detector does not expose them.
struct AttackerKnowledge {
  std::optional<Matrix> residual_cov;
  std::optional<double> threshold;
  std::optional<double> step;
};

/// Fresh per-step view of the loop handed to the attack generator.
struct AttackContext {
  std::size_t k = 0;
  double t = 0.0;
  const Vector* y = nullptr;          // noisy measurement before the attack
  const Vector* y_predicted = nullptr;  // C xhat
  const Vector* xhat = nullptr;
  const AttackerKnowledge* knowledge = nullptr;
};

/// delta = -y + C xhat + S dbar, which makes the residual exactly S dbar.
Vector stealthy_base(const Vector& y, const Vector& y_predicted, const Matrix& cov_sqrt,
                     const Vector& dbar);

/// Stateful generator bound to one run. Owns its own rng stream.
class AttackGenerator {
 public:
  AttackGenerator(AttackSpec spec, Eigen::Index sensors, std::uint64_t seed);

  /// Writes the attack for this step into `delta`.
  void operator()(const AttackContext& ctx, Vector& delta);
  Vector operator()(const AttackContext& ctx);

  const AttackSpec& spec() const { return spec_; }

  /// S dbar for the last stealthy step (the residual the attack imposes).
  const Vector& last_target_residual() const { return target_residual_; }
  const Vector& last_dbar() const { return dbar_; }
  /// Square root of the covariance the attacker normalizes against.
  const Matrix& cov_sqrt() const { return cov_sqrt_; }

 private:
  void prepare(const AttackerKnowledge& knowledge);
  double draw_magnitude(const attack::HiddenPolicy& policy, double alpha);

  AttackSpec spec_;
  Eigen::Index sensors_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};

  bool prepared_ = false;
  Matrix cov_sqrt_;
  Vector direction_;
  double alpha_ = 0.0;
  double hidden_scale_ = 1.0;  // alpha / alpha*(rate)
  double filter_peak_ = 1.0;
  Vector dbar_;
  Vector target_residual_;
};

/// Largest |rho| of the Euler-discretized unit-step response, >= 1 because of
/// Butterworth overshoot.
double butterworth_step_peak(double cutoff, double step);

/// Unit vector along all-ones of length p.
Vector default_direction(Eigen::Index sensors);

}  // namespace resdet
