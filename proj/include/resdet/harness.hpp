#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "resdet/simulation.hpp"

namespace resdet {

struct OutputOptions {
  bool trace = false;
  bool histogram = false;
  bool raw_z = false;
  int bins = 200;
};

struct Scenario {
  PlantModel model;
  double step = 0.001;
  std::size_t horizon = 0;  // steps
  AttackSpec attack = attack::None{};
  DetectorConfig detector = detector::ChiSquared{};
  std::uint64_t seed = 0;
  std::size_t transient_discard = 0;
  SimulationOptions initial;
  OutputOptions outputs;
};

/// Default discard for a detector: 10 / (cutoff * tau) steps for filtered
/// detectors, zero otherwise.
std::size_t default_transient_discard(const DetectorConfig& detector, double step);

/// Strict parse of the scenario document; unknown keys are rejected.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

/// Structured (JSON) form of a scenario; parse_scenario(scenario_to_json(s)) == s.
std::string scenario_to_json(const Scenario& scenario);

struct RunReport {
  std::string detector;
  std::string attack;
  std::uint64_t seed = 0;
  double step = 0.0;
  std::size_t horizon = 0;
  std::size_t transient_discard = 0;
  std::size_t counted_steps = 0;
  std::size_t alarms = 0;
  double alarm_rate = 0.0;
  double threshold = 0.0;
  double z_mean = 0.0;
  double z_variance = 0.0;
  double z_max = 0.0;
  std::vector<std::pair<double, double>> z_quantiles;  // (level, value)
  std::vector<double> z_samples;  // post-discard distance measures
};

/// Accumulates alarm and distance statistics over post-discard steps.
class ReportBuilder {
 public:
  ReportBuilder(std::size_t transient_discard, bool keep_samples = true);
  void add(const StepRecord& record);
  RunReport finish() const;

 private:
  std::size_t discard_;
  bool keep_;
  std::size_t seen_ = 0;
  std::size_t counted_ = 0;
  std::size_t alarms_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double max_ = 0.0;
  std::vector<double> samples_;
};

/// Runs the scenario. When `out_dir` is given, writes trace.csv (if
/// outputs.trace), histogram.csv (if outputs.histogram), z.csv (if
/// outputs.raw_z) and the summary.json sidecar.
RunReport run_experiment(const Scenario& scenario,
                         const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Plain-text key=value summary.
std::string format_summary(const RunReport& report);
/// Structured sidecar of the summary.
std::string summary_to_json(const RunReport& report);

/// "k,t,x0,...,xhat0,...,y0,...,delta0,...,ybar0,...,r0,...,rho0,...,yf,z,alarm"
std::string trace_csv_header(Eigen::Index n, Eigen::Index p);
void write_trace_row(std::ostream& os, const StepRecord& record, Eigen::Index p);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;
};
/// Fixed bin count over [min, max] of the data.
Histogram make_histogram(const std::vector<double>& data, int bins);

/// Empirical CDF value at x: fraction of samples <= x.
double empirical_cdf(const std::vector<double>& sorted, double x);

/// Runs the y_f detector scenario and returns max |y_f| for t > settle.
double calibrate_af(const Scenario& scenario, double settle_time);

/// Built-in reproduction cases: fig1_cdf, fig2_pdf, fig3_residuals,
/// tuning_table. Writes data files into out_dir and returns the text report.
std::string reproduce(const std::string& case_id, const std::filesystem::path& out_dir);

/// Two-sided Kolmogorov-Smirnov statistic of `samples` (sorted in place)
/// against the chi-squared distribution with `dof` degrees of freedom.
double ks_statistic_chi2(std::vector<double>& samples, double dof);

/// The second-order example plant: A = [[0,1],[-4,-20]], B = [0;1],
/// C = [1,0], K = [1,1], L = [0;2], Sigma_eta = noise.
PlantModel example_plant(double noise = 2.0);

}  // namespace resdet
