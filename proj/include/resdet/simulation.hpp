#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "resdet/attacks.hpp"
#include "resdet/detection.hpp"
#include "resdet/estimation.hpp"
#include "resdet/statespace.hpp"

namespace resdet {

namespace detector {

/// Threshold is `alpha` if set, otherwise tune_threshold(false_alarm_rate, p).
struct ChiSquared {
  double false_alarm_rate = 0.05;
  std::optional<double> alpha;
};

struct FilteredChiSquared {
  double false_alarm_rate = 0.05;
  std::optional<double> alpha;
  double cutoff = 12.0;
  FilteredCovarianceMode mode = FilteredCovarianceMode::ClosedForm;
};

/// Runs the discontinuous observer in place of the Luenberger observer and
/// thresholds the filtered switching term.
struct YfThreshold {
  std::optional<double> alpha_f;
  double cutoff = 12.0;
  double c1 = 5.0;
  double c2 = 5.0;
  double c3 = 12.0;
};

}  // namespace detector

using DetectorConfig =
    std::variant<detector::ChiSquared, detector::FilteredChiSquared, detector::YfThreshold>;

const char* detector_id(const DetectorConfig& config);

/// Threshold the configured detector will use for p sensors (alpha_f for the
/// y_f detector, 0 if uncalibrated).
double detector_threshold(const DetectorConfig& config, Eigen::Index sensors);

struct SimulationOptions {
  std::optional<Vector> x0;
  std::optional<Vector> xhat0;
};

/// One time step. Optional channels are empty when the detector does not
/// produce them.
struct StepRecord {
  std::size_t k = 0;
  double t = 0.0;
  Vector x;
  Vector xhat;
  Vector y;
  Vector delta;
  Vector ybar;
  Vector r;
  std::optional<Vector> rho;
  std::optional<double> yf;
  double z = 0.0;
  bool alarm = false;
};

struct TraceMetadata {
  std::uint64_t seed = 0;
  double step = 0.0;
  std::size_t horizon = 0;
  std::string detector;
  std::string attack;
};

struct SimulationTrace {
  TraceMetadata meta;
  std::vector<StepRecord> records;
};

/// Step-by-step closed-loop simulation with an attack injected on the sensor
/// channel and one detector evaluated every sample.
///
/// Luenberger detectors follow the Euler recursion in (x, xhat):
///   x+    = x + tau (A x + B K xhat)
///   xhat+ = xhat + tau (A xhat + B K xhat + L (ybar - C xhat)).
/// The y_f detector integrates plant and discontinuous observer with RK4,
/// holding u and ybar over the step.
class Simulator {
 public:
  Simulator(const PlantModel& model, double step, const AttackSpec& attack,
            const DetectorConfig& detector, std::uint64_t seed,
            const SimulationOptions& options = {});
  ~Simulator();
  Simulator(Simulator&&) noexcept;
  Simulator& operator=(Simulator&&) noexcept;

  /// Computes outputs at step k, then advances the state to k+1. The
  /// returned record is owned by the simulator and overwritten by the next call.
  const StepRecord& step();

  std::size_t steps_taken() const;
  const PlantModel& model() const;
  /// Empty for the y_f detector.
  const std::optional<DiscreteClosedLoop>& closed_loop() const;
  const AttackGenerator& attack() const;
  double threshold() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Runs `horizon` steps, calling `sink` for every record.
void run_simulation(const PlantModel& model, double step, std::size_t horizon,
                    const AttackSpec& attack, const DetectorConfig& detector,
                    std::uint64_t seed, const std::function<void(const StepRecord&)>& sink,
                    const SimulationOptions& options = {});

/// Runs `horizon` steps and keeps every record.
SimulationTrace run_simulation(const PlantModel& model, double step, std::size_t horizon,
                               const AttackSpec& attack, const DetectorConfig& detector,
                               std::uint64_t seed, const SimulationOptions& options = {});

/// Reference recursion in (x, e) coordinates:
///   x+ = F x + G e,  e+ = H e - L_d (eta + delta),  r = C e + eta + delta,
/// driven by externally supplied eta and delta sequences. Returns (x_k, e_k, r_k).
struct ErrorCoordinateStep {
  Vector x;
  Vector e;
  Vector r;
};
std::vector<ErrorCoordinateStep> simulate_error_coordinates(
    const PlantModel& model, const DiscreteClosedLoop& loop, const Vector& x0, const Vector& e0,
    const std::vector<Vector>& noise, const std::vector<Vector>& attack);

}  // namespace resdet
