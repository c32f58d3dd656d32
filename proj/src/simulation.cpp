#include "resdet/simulation.hpp"

#include <cmath>
#include <limits>

#include "resdet/error.hpp"

namespace resdet {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double threshold_for(double rate, const std::optional<double>& alpha, Eigen::Index p) {
  if (alpha) {
    if (!(*alpha >= 0.0)) fail(ErrorCode::DomainError, "threshold must be non-negative");
    return *alpha;
  }
  return tune_threshold(rate, static_cast<int>(p));
}

// z for a singular normalizing covariance: zero residual is no evidence,
// anything else is infinitely unlikely.
double degenerate_distance(const Vector& r) {
  return r.squaredNorm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace

const char* detector_id(const DetectorConfig& config) {
  return std::visit(overloaded{
                        [](const detector::ChiSquared&) { return "chi_squared"; },
                        [](const detector::FilteredChiSquared&) { return "filtered_chi_squared"; },
                        [](const detector::YfThreshold&) { return "yf_threshold"; },
                    },
                    config);
}

double detector_threshold(const DetectorConfig& config, Eigen::Index sensors) {
  return std::visit(overloaded{
                        [&](const detector::ChiSquared& d) {
                          return threshold_for(d.false_alarm_rate, d.alpha, sensors);
                        },
                        [&](const detector::FilteredChiSquared& d) {
                          return threshold_for(d.false_alarm_rate, d.alpha, sensors);
                        },
                        [](const detector::YfThreshold& d) { return d.alpha_f.value_or(0.0); },
                    },
                    config);
}

struct Simulator::Impl {
  PlantModel model;
  double tau;
  DetectorConfig config;
  std::optional<DiscreteClosedLoop> loop;
  Rng rng;
  NoiseSampler noise;
  AttackGenerator attack;
  AttackerKnowledge knowledge;
  double threshold = 0.0;

  std::optional<ChiSquaredDetector> chi;
  std::optional<FilteredChiSquaredDetector> filtered;
  std::optional<YfDetector> yf;
  bool degenerate = false;
  std::optional<ButterworthBank> degenerate_bank;

  bool sliding = false;
  DiscObserverGains gains;
  DiscObserverState observer;

  Vector x, xhat, u, yhat, eta;
  Vector dx, k1, k2, k3, k4, tmp;
  StepRecord rec;
  std::size_t k = 0;

  Impl(const PlantModel& m, double step, const AttackSpec& spec, const DetectorConfig& det,
       std::uint64_t seed, const SimulationOptions& options)
      : model(validate_model(m)),
        tau(step),
        config(det),
        rng(seed),
        noise(m.noise_cov),
        attack(spec, m.p(), splitmix64(seed)) {
    if (!(step > 0.0) || !std::isfinite(step)) {
      fail(ErrorCode::NonPositiveStep, "step must be positive and finite");
    }
    const auto n = model.n();
    const auto p = model.p();
    threshold = detector_threshold(config, p);

    std::visit(overloaded{
                   [&](const detector::ChiSquared&) {
                     loop = detail::discretize_unchecked(model, tau);
                     degenerate = detail::residual_cov_singular(loop->residual_cov);
                     if (!degenerate) chi.emplace(loop->residual_cov, threshold);
                   },
                   [&](const detector::FilteredChiSquared& d) {
                     loop = detail::discretize_unchecked(model, tau);
                     degenerate = detail::residual_cov_singular(loop->residual_cov);
                     if (degenerate) {
                       degenerate_bank.emplace(d.cutoff, tau, p);
                     } else {
                       filtered.emplace(loop->residual_cov, threshold, d.cutoff, tau, d.mode);
                     }
                   },
                   [&](const detector::YfThreshold& d) {
                     sliding = true;
                     gains = disc_observer_gains(model.A, model.B, model.C, d.c1, d.c2, d.c3);
                     yf.emplace(threshold, d.cutoff, tau);
                   },
               },
               config);

    if (loop) {
      knowledge.residual_cov = loop->residual_cov;
      knowledge.threshold = threshold;
      knowledge.step = tau;
    }

    x = options.x0.value_or(Vector::Zero(n));
    xhat = options.xhat0.value_or(Vector::Zero(n));
    if (x.size() != n || xhat.size() != n) {
      fail(ErrorCode::DimensionMismatch, "initial state length does not match the plant");
    }
    observer.xhat1 = xhat[0];
    observer.xhat2 = xhat[1 % n];
    u.setZero(model.m());
    yhat.setZero(p);
    eta.setZero(p);
    rec.delta.setZero(p);
    if (std::holds_alternative<detector::FilteredChiSquared>(config)) rec.rho = Vector::Zero(p);
    if (sliding) rec.yf = 0.0;
  }

  void plant_rk4() {
    // x' = A x + B u with u held.
    tmp.noalias() = model.B * u;
    k1.noalias() = model.A * x;
    k1 += tmp;
    dx = x + 0.5 * tau * k1;
    k2.noalias() = model.A * dx;
    k2 += tmp;
    dx = x + 0.5 * tau * k2;
    k3.noalias() = model.A * dx;
    k3 += tmp;
    dx = x + tau * k3;
    k4.noalias() = model.A * dx;
    k4 += tmp;
    x += (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  const StepRecord& step() {
    rec.k = k;
    rec.t = static_cast<double>(k) * tau;
    rec.x = x;
    rec.xhat = xhat;

    noise.sample(rng, eta);
    rec.y.noalias() = model.C * x;
    rec.y += eta;
    yhat.noalias() = model.C * xhat;

    AttackContext ctx;
    ctx.k = k;
    ctx.t = rec.t;
    ctx.y = &rec.y;
    ctx.y_predicted = &yhat;
    ctx.xhat = &xhat;
    ctx.knowledge = loop ? &knowledge : nullptr;
    attack(ctx, rec.delta);

    rec.ybar = rec.y + rec.delta;
    rec.r = rec.ybar - yhat;

    u.noalias() = model.K * xhat;
    if (sliding) {
      observer = disc_observer_step(observer, rec.ybar[0], u[0], gains, tau);
      const double out = yf->update(observer.s_applied);
      rec.yf = out;
      rec.z = std::abs(out);
      rec.alarm = yf->alarm(out);
      plant_rk4();
      xhat[0] = observer.xhat1;
      xhat[1] = observer.xhat2;
    } else {
      if (chi) {
        rec.z = chi->distance(rec.r);
      } else if (filtered) {
        rec.z = filtered->update(rec.r);
        *rec.rho = filtered->rho();
      } else if (degenerate_bank) {
        *rec.rho = degenerate_bank->step(rec.r);
        rec.z = degenerate_distance(*rec.rho);
      } else {
        rec.z = degenerate_distance(rec.r);
      }
      rec.alarm = threshold_test(rec.z, threshold);

      // Euler step of plant and Luenberger observer.
      tmp.noalias() = model.B * u;
      dx.noalias() = model.A * x;
      dx += tmp;
      k1.noalias() = model.A * xhat;
      k1 += tmp;
      k1.noalias() += model.L * rec.r;
      x += tau * dx;
      xhat += tau * k1;
    }
    ++k;
    return rec;
  }
};

Simulator::Simulator(const PlantModel& model, double step, const AttackSpec& attack,
                     const DetectorConfig& detector, std::uint64_t seed,
                     const SimulationOptions& options)
    : impl_(std::make_unique<Impl>(model, step, attack, detector, seed, options)) {}

Simulator::~Simulator() = default;
Simulator::Simulator(Simulator&&) noexcept = default;
Simulator& Simulator::operator=(Simulator&&) noexcept = default;

const StepRecord& Simulator::step() { return impl_->step(); }
std::size_t Simulator::steps_taken() const { return impl_->k; }
const PlantModel& Simulator::model() const { return impl_->model; }
const std::optional<DiscreteClosedLoop>& Simulator::closed_loop() const { return impl_->loop; }
const AttackGenerator& Simulator::attack() const { return impl_->attack; }
double Simulator::threshold() const { return impl_->threshold; }

void run_simulation(const PlantModel& model, double step, std::size_t horizon,
                    const AttackSpec& attack, const DetectorConfig& detector,
                    std::uint64_t seed, const std::function<void(const StepRecord&)>& sink,
                    const SimulationOptions& options) {
  if (horizon == 0) fail(ErrorCode::HorizonZero, "horizon must be at least one step");
  Simulator sim(model, step, attack, detector, seed, options);
  for (std::size_t i = 0; i < horizon; ++i) sink(sim.step());
}

SimulationTrace run_simulation(const PlantModel& model, double step, std::size_t horizon,
                               const AttackSpec& attack, const DetectorConfig& detector,
                               std::uint64_t seed, const SimulationOptions& options) {
  SimulationTrace trace;
  trace.meta = TraceMetadata{seed, step, horizon, detector_id(detector), attack_id(attack)};
  trace.records.reserve(horizon);
  run_simulation(model, step, horizon, attack, detector, seed,
                 [&](const StepRecord& r) { trace.records.push_back(r); }, options);
  return trace;
}

std::vector<ErrorCoordinateStep> simulate_error_coordinates(
    const PlantModel& model, const DiscreteClosedLoop& loop, const Vector& x0, const Vector& e0,
    const std::vector<Vector>& noise, const std::vector<Vector>& attack) {
  if (noise.size() != attack.size()) {
    fail(ErrorCode::DimensionMismatch, "noise and attack sequences differ in length");
  }
  std::vector<ErrorCoordinateStep> out;
  out.reserve(noise.size());
  Vector x = x0;
  Vector e = e0;
  for (std::size_t k = 0; k < noise.size(); ++k) {
    const Vector v = noise[k] + attack[k];
    out.push_back({x, e, model.C * e + v});
    const Vector x_next = loop.F * x + loop.G * e;
    e = loop.H * e - loop.L_d * v;
    x = x_next;
  }
  return out;
}

}  // namespace resdet
