#include "resdet/attacks.hpp"

#include <cmath>

#include "resdet/detection.hpp"
#include "resdet/error.hpp"

namespace resdet {
namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Vector broadcast(const Vector& v, Eigen::Index sensors, const char* what) {
  if (v.size() == 1) return Vector::Constant(sensors, v[0]);
  if (v.size() != sensors) {
    fail(ErrorCode::DimensionMismatch, std::string(what) + " length does not match sensor count");
  }
  return v;
}

Vector checked_direction(const std::optional<Vector>& d, Eigen::Index sensors) {
  if (!d) return default_direction(sensors);
  if (d->size() != sensors) {
    fail(ErrorCode::DimensionMismatch, "attack direction length does not match sensor count");
  }
  if (std::abs(d->norm() - 1.0) > 1e-9) fail(ErrorCode::DomainError, "attack direction must be unit norm");
  return *d;
}

void check_hidden(const attack::HiddenPolicy& policy) {
  if (!(policy.rate > 0.0 && policy.rate <= 1.0)) {
    fail(ErrorCode::DomainError, "hidden attack rate must lie in (0, 1]");
  }
  if (!(policy.spike_factor >= 1.0)) fail(ErrorCode::DomainError, "spike factor must be >= 1");
}

void check_zero_alarm(const attack::ZeroAlarmPolicy& policy, bool allow_large) {
  if (!(policy.scale >= 0.0) || (!allow_large && policy.scale > 1.0)) {
    fail(ErrorCode::DomainError, "zero-alarm scale must lie in [0, 1]");
  }
  if (!(policy.margin >= 0.0 && policy.margin < 1.0)) {
    fail(ErrorCode::DomainError, "zero-alarm margin must lie in [0, 1)");
  }
}

}  // namespace

const char* attack_id(const AttackSpec& spec) {
  return std::visit(overloaded{
                        [](const attack::None&) { return "none"; },
                        [](const attack::Constant&) { return "constant"; },
                        [](const attack::Sinusoid&) { return "sinusoid"; },
                        [](const attack::ZeroAlarm&) { return "zero_alarm"; },
                        [](const attack::Hidden&) { return "hidden"; },
                        [](const attack::FilteredZeroAlarm&) { return "filtered_zero_alarm"; },
                        [](const attack::FilteredHidden&) { return "filtered_hidden"; },
                    },
                    spec);
}

bool is_stealthy(const AttackSpec& spec) {
  return std::holds_alternative<attack::ZeroAlarm>(spec) ||
         std::holds_alternative<attack::Hidden>(spec) ||
         std::holds_alternative<attack::FilteredZeroAlarm>(spec) ||
         std::holds_alternative<attack::FilteredHidden>(spec);
}

Vector default_direction(Eigen::Index sensors) {
  return Vector::Constant(sensors, 1.0 / std::sqrt(static_cast<double>(sensors)));
}

Vector stealthy_base(const Vector& y, const Vector& y_predicted, const Matrix& cov_sqrt,
                     const Vector& dbar) {
  if (y.size() != y_predicted.size() || cov_sqrt.rows() != y.size() ||
      cov_sqrt.cols() != dbar.size()) {
    fail(ErrorCode::DimensionMismatch, "stealthy attack operand sizes disagree");
  }
  return -y + y_predicted + cov_sqrt * dbar;
}

double butterworth_step_peak(double cutoff, double step) {
  ButterworthBank bank(cutoff, step, 1);
  const auto horizon = static_cast<std::size_t>(std::ceil(40.0 / (cutoff * step)));
  double peak = 0.0;
  for (std::size_t k = 0; k < horizon; ++k) peak = std::max(peak, std::abs(bank.step_scalar(1.0)));
  return std::max(peak, 1.0);
}

AttackGenerator::AttackGenerator(AttackSpec spec, Eigen::Index sensors, std::uint64_t seed)
    : spec_(std::move(spec)), sensors_(sensors), rng_(seed) {
  if (sensors < 1) fail(ErrorCode::DimensionMismatch, "attack needs at least one sensor");
  std::visit(overloaded{
                 [](const attack::None&) {},
                 [&](attack::Constant& a) { a.level = broadcast(a.level, sensors, "level"); },
                 [&](attack::Sinusoid& a) {
                   a.amplitude = broadcast(a.amplitude, sensors, "amplitude");
                 },
                 [&](attack::ZeroAlarm& a) {
                   check_zero_alarm(a.policy, false);
                   direction_ = checked_direction(a.policy.direction, sensors);
                 },
                 [&](attack::Hidden& a) {
                   check_hidden(a.policy);
                   direction_ = checked_direction(a.policy.direction, sensors);
                 },
                 [&](attack::FilteredZeroAlarm& a) {
                   check_zero_alarm(a.policy, a.alternating);
                   if (!(a.cutoff > 0.0)) fail(ErrorCode::DomainError, "cut-off must be positive");
                   direction_ = checked_direction(a.policy.direction, sensors);
                 },
                 [&](attack::FilteredHidden& a) {
                   check_hidden(a.policy);
                   if (!(a.cutoff > 0.0)) fail(ErrorCode::DomainError, "cut-off must be positive");
                   direction_ = checked_direction(a.policy.direction, sensors);
                 },
             },
             spec_);
  dbar_.setZero(sensors);
  target_residual_.setZero(sensors);
}

void AttackGenerator::prepare(const AttackerKnowledge& knowledge) {
  if (!knowledge.residual_cov || !knowledge.threshold) {
    fail(ErrorCode::MissingAttackerKnowledge,
         "stealthy attack needs the residual covariance and detector threshold");
  }
  if (knowledge.residual_cov->rows() != sensors_) {
    fail(ErrorCode::DimensionMismatch, "residual covariance size does not match sensor count");
  }
  alpha_ = *knowledge.threshold;
  Matrix target_cov = *knowledge.residual_cov;

  auto filtered_scale = [&](double cutoff) {
    if (!knowledge.step) {
      fail(ErrorCode::MissingAttackerKnowledge, "filtered attack needs the sample step");
    }
    return *knowledge.step * cutoff / (2.0 * kSqrt2);
  };
  auto hidden_scale = [&](const attack::HiddenPolicy& policy) {
    const double tuned = tune_threshold(policy.rate, static_cast<int>(sensors_));
    return tuned > 0.0 ? alpha_ / tuned : 1.0;
  };

  std::visit(overloaded{
                 [](const auto&) {},
                 [&](const attack::Hidden& a) { hidden_scale_ = hidden_scale(a.policy); },
                 [&](const attack::FilteredZeroAlarm& a) {
                   if (a.alternating) {
                     filtered_scale(a.cutoff);  // still requires the step
                   } else {
                     target_cov *= filtered_scale(a.cutoff);
                     filter_peak_ = butterworth_step_peak(a.cutoff, *knowledge.step);
                   }
                 },
                 [&](const attack::FilteredHidden& a) {
                   target_cov *= filtered_scale(a.cutoff);
                   hidden_scale_ = hidden_scale(a.policy);
                 },
             },
             spec_);
  cov_sqrt_ = sqrt_psd(target_cov);
  prepared_ = true;
}

double AttackGenerator::draw_magnitude(const attack::HiddenPolicy& policy, double alpha) {
  switch (policy.law) {
    case attack::MagnitudeLaw::ChiSquared: {
      double q = 0.0;
      for (Eigen::Index i = 0; i < sensors_; ++i) {
        const double g = normal_(rng_);
        q += g * g;
      }
      return std::sqrt(hidden_scale_ * q);
    }
    case attack::MagnitudeLaw::TwoPoint: {
      const double root = std::sqrt(alpha);
      return uniform_(rng_) < policy.rate ? policy.spike_factor * root : root * (1.0 - 1e-9);
    }
  }
  return 0.0;
}

void AttackGenerator::operator()(const AttackContext& ctx, Vector& delta) {
  delta.resize(sensors_);
  auto ensure_prepared = [&] {
    if (!ctx.y || !ctx.y_predicted) {
      fail(ErrorCode::MissingAttackerKnowledge, "stealthy attack needs y and C xhat");
    }
    if (!prepared_) {
      if (!ctx.knowledge) {
        fail(ErrorCode::MissingAttackerKnowledge, "no detector information available");
      }
      prepare(*ctx.knowledge);
    }
  };
  auto shaped = [&](double magnitude) {
    dbar_ = magnitude * direction_;
    target_residual_.noalias() = cov_sqrt_ * dbar_;
    delta = -*ctx.y + *ctx.y_predicted + target_residual_;
  };
  auto zero_alarm_magnitude = [&](const attack::ZeroAlarmPolicy& policy) {
    return policy.scale * std::sqrt(alpha_) * (1.0 - policy.margin);
  };

  std::visit(overloaded{
                 [&](const attack::None&) { delta.setZero(); },
                 [&](const attack::Constant& a) {
                   if (ctx.t > a.start_time) {
                     delta = a.level;
                   } else {
                     delta.setZero();
                   }
                 },
                 [&](const attack::Sinusoid& a) {
                   if (ctx.t > a.start_time) {
                     delta = a.amplitude * std::sin(a.frequency * ctx.t);
                   } else {
                     delta.setZero();
                   }
                 },
                 [&](const attack::ZeroAlarm& a) {
                   ensure_prepared();
                   shaped(zero_alarm_magnitude(a.policy));
                 },
                 [&](const attack::Hidden& a) {
                   ensure_prepared();
                   shaped(draw_magnitude(a.policy, alpha_));
                 },
                 [&](const attack::FilteredZeroAlarm& a) {
                   ensure_prepared();
                   if (a.alternating) {
                     const double sign = (ctx.k % 2 == 0) ? 1.0 : -1.0;
                     shaped(sign * a.policy.scale * std::sqrt(alpha_));
                   } else {
                     shaped(zero_alarm_magnitude(a.policy) / filter_peak_);
                   }
                 },
                 [&](const attack::FilteredHidden& a) {
                   ensure_prepared();
                   shaped(draw_magnitude(a.policy, alpha_));
                 },
             },
             spec_);
}

Vector AttackGenerator::operator()(const AttackContext& ctx) {
  Vector delta;
  (*this)(ctx, delta);
  return delta;
}

}  // namespace resdet
