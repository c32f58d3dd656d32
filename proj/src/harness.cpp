#include "resdet/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "resdet/error.hpp"

namespace resdet {
namespace {

using json = nlohmann::json;

constexpr double kQuantileLevels[] = {0.5, 0.9, 0.95, 0.99};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void put(std::ostream& os, double v) { os << fmt("%.17g", v); }

void put_vector(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    os << ',';
    put(os, v[i]);
  }
}

void put_empty(std::ostream& os, Eigen::Index count) {
  for (Eigen::Index i = 0; i < count; ++i) os << ',';
}

// Linear interpolation between order statistics.
double quantile_sorted(const std::vector<double>& sorted, double level) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  if (w == 0.0) return sorted[lo];
  return sorted[lo] + w * (sorted[hi] - sorted[lo]);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IOError, "cannot write " + path.string());
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) fail(ErrorCode::IOError, "write failed for " + path.string());
}

json number_json(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

}  // namespace

ReportBuilder::ReportBuilder(std::size_t transient_discard, bool keep_samples)
    : discard_(transient_discard), keep_(keep_samples) {}

void ReportBuilder::add(const StepRecord& record) {
  if (seen_++ < discard_) return;
  ++counted_;
  if (record.alarm) ++alarms_;
  const double z = record.z;
  const double d = z - mean_;
  mean_ += d / static_cast<double>(counted_);
  m2_ += d * (z - mean_);
  if (counted_ == 1 || z > max_) max_ = z;
  if (keep_) samples_.push_back(z);
}

RunReport ReportBuilder::finish() const {
  RunReport r;
  r.transient_discard = discard_;
  r.counted_steps = counted_;
  r.alarms = alarms_;
  r.alarm_rate = counted_ ? static_cast<double>(alarms_) / static_cast<double>(counted_) : 0.0;
  r.z_mean = mean_;
  r.z_variance = counted_ > 1 ? m2_ / static_cast<double>(counted_ - 1) : 0.0;
  r.z_max = max_;
  if (keep_) {
    r.z_samples = samples_;
    std::vector<double> sorted = samples_;
    std::sort(sorted.begin(), sorted.end());
    for (double level : kQuantileLevels) r.z_quantiles.emplace_back(level, quantile_sorted(sorted, level));
  }
  return r;
}

std::string trace_csv_header(Eigen::Index n, Eigen::Index p) {
  std::ostringstream os;
  os << "k,t";
  auto cols = [&](const char* name, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; ++i) os << ',' << name << i;
  };
  cols("x", n);
  cols("xhat", n);
  cols("y", p);
  cols("delta", p);
  cols("ybar", p);
  cols("r", p);
  cols("rho", p);
  os << ",yf,z,alarm";
  return os.str();
}

void write_trace_row(std::ostream& os, const StepRecord& rec, Eigen::Index p) {
  os << rec.k << ',';
  put(os, rec.t);
  put_vector(os, rec.x);
  put_vector(os, rec.xhat);
  put_vector(os, rec.y);
  put_vector(os, rec.delta);
  put_vector(os, rec.ybar);
  put_vector(os, rec.r);
  if (rec.rho) {
    put_vector(os, *rec.rho);
  } else {
    put_empty(os, p);
  }
  os << ',';
  if (rec.yf) put(os, *rec.yf);
  os << ',';
  put(os, rec.z);
  os << ',' << (rec.alarm ? 1 : 0) << '\n';
}

Histogram make_histogram(const std::vector<double>& data, int bins) {
  if (bins < 1) fail(ErrorCode::DomainError, "histogram needs at least one bin");
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  bool any = false;
  for (double v : data) {
    if (!std::isfinite(v)) continue;
    if (!any) {
      h.lo = h.hi = v;
      any = true;
    }
    h.lo = std::min(h.lo, v);
    h.hi = std::max(h.hi, v);
  }
  if (!any) return h;
  const double width = h.hi > h.lo ? (h.hi - h.lo) / bins : 1.0;
  for (double v : data) {
    if (!std::isfinite(v)) continue;
    auto idx = static_cast<std::size_t>((v - h.lo) / width);
    if (idx >= h.counts.size()) idx = h.counts.size() - 1;
    ++h.counts[idx];
  }
  return h;
}

double empirical_cdf(const std::vector<double>& sorted, double x) {
  if (sorted.empty()) return 0.0;
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

double ks_statistic_chi2(std::vector<double>& samples, double dof) {
  if (samples.empty()) fail(ErrorCode::DomainError, "no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = chi2_cdf(samples[i], dof);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

PlantModel example_plant(double noise) {
  PlantModel m;
  m.A.resize(2, 2);
  m.A << 0.0, 1.0, -4.0, -20.0;
  m.B.resize(2, 1);
  m.B << 0.0, 1.0;
  m.C.resize(1, 2);
  m.C << 1.0, 0.0;
  m.K.resize(1, 2);
  m.K << 1.0, 1.0;
  m.L.resize(2, 1);
  m.L << 0.0, 2.0;
  m.noise_cov = Matrix::Constant(1, 1, noise);
  return m;
}

std::string format_summary(const RunReport& r) {
  std::ostringstream os;
  os << "detector=" << r.detector << '\n'
     << "attack=" << r.attack << '\n'
     << "seed=" << r.seed << '\n'
     << "step=" << fmt("%.10g", r.step) << '\n'
     << "horizon=" << r.horizon << '\n'
     << "transient_discard=" << r.transient_discard << '\n'
     << "counted_steps=" << r.counted_steps << '\n'
     << "alarms=" << r.alarms << '\n'
     << "alarm_rate=" << fmt("%.10g", r.alarm_rate) << '\n'
     << "threshold=" << fmt("%.10g", r.threshold) << '\n'
     << "z_mean=" << fmt("%.10g", r.z_mean) << '\n'
     << "z_variance=" << fmt("%.10g", r.z_variance) << '\n'
     << "z_max=" << fmt("%.10g", r.z_max) << '\n';
  for (const auto& [level, value] : r.z_quantiles) {
    os << "z_q" << fmt("%g", level) << '=' << fmt("%.10g", value) << '\n';
  }
  return os.str();
}

std::string summary_to_json(const RunReport& r) {
  json doc;
  doc["detector"] = r.detector;
  doc["attack"] = r.attack;
  doc["seed"] = r.seed;
  doc["step"] = r.step;
  doc["horizon"] = r.horizon;
  doc["transient_discard"] = r.transient_discard;
  doc["counted_steps"] = r.counted_steps;
  doc["alarms"] = r.alarms;
  doc["alarm_rate"] = r.alarm_rate;
  doc["threshold"] = number_json(r.threshold);
  doc["z_mean"] = number_json(r.z_mean);
  doc["z_variance"] = number_json(r.z_variance);
  doc["z_max"] = number_json(r.z_max);
  json q = json::object();
  for (const auto& [level, value] : r.z_quantiles) q[fmt("%g", level)] = number_json(value);
  doc["z_quantiles"] = q;
  return doc.dump(2) + "\n";
}

RunReport run_experiment(const Scenario& s, const std::optional<std::filesystem::path>& out_dir) {
  if (s.horizon == 0) fail(ErrorCode::HorizonZero, "horizon must be at least one step");
  if (s.transient_discard > s.horizon) {
    fail(ErrorCode::DomainError, "transient_discard exceeds the horizon");
  }
  Simulator sim(s.model, s.step, s.attack, s.detector, s.seed, s.initial);
  ReportBuilder builder(s.transient_discard, true);

  std::ofstream trace;
  std::filesystem::path trace_path;
  if (out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*out_dir, ec);
    if (ec) fail(ErrorCode::IOError, "cannot create " + out_dir->string() + ": " + ec.message());
    if (s.outputs.trace) {
      trace_path = *out_dir / "trace.csv";
      trace = open_output(trace_path);
      trace << trace_csv_header(s.model.n(), s.model.p()) << '\n';
    }
  }

  const auto p = s.model.p();
  for (std::size_t i = 0; i < s.horizon; ++i) {
    const StepRecord& rec = sim.step();
    builder.add(rec);
    if (trace.is_open()) write_trace_row(trace, rec, p);
  }

  RunReport report = builder.finish();
  report.detector = detector_id(s.detector);
  report.attack = attack_id(s.attack);
  report.seed = s.seed;
  report.step = s.step;
  report.horizon = s.horizon;
  report.threshold = sim.threshold();

  if (out_dir) {
    if (trace.is_open()) check_written(trace, trace_path);
    if (s.outputs.histogram) {
      const auto path = *out_dir / "histogram.csv";
      auto out = open_output(path);
      const Histogram h = make_histogram(report.z_samples, s.outputs.bins);
      const double width = h.hi > h.lo ? (h.hi - h.lo) / s.outputs.bins : 1.0;
      const double total = static_cast<double>(report.z_samples.size());
      out << "bin_lo,bin_hi,count,density\n";
      for (std::size_t b = 0; b < h.counts.size(); ++b) {
        const double lo = h.lo + width * static_cast<double>(b);
        put(out, lo);
        out << ',';
        put(out, lo + width);
        out << ',' << h.counts[b] << ',';
        put(out, total > 0 ? static_cast<double>(h.counts[b]) / (total * width) : 0.0);
        out << '\n';
      }
      check_written(out, path);
    }
    if (s.outputs.raw_z) {
      const auto path = *out_dir / "z.csv";
      auto out = open_output(path);
      out << "k,z\n";
      for (std::size_t i = 0; i < report.z_samples.size(); ++i) {
        out << s.transient_discard + i << ',';
        put(out, report.z_samples[i]);
        out << '\n';
      }
      check_written(out, path);
    }
    const auto path = *out_dir / "summary.json";
    auto out = open_output(path);
    out << summary_to_json(report);
    check_written(out, path);
  }
  return report;
}

double calibrate_af(const Scenario& s, double settle_time) {
  if (!std::holds_alternative<detector::YfThreshold>(s.detector)) {
    fail(ErrorCode::DomainError, "alpha_f calibration needs a yf_threshold detector");
  }
  if (s.horizon == 0) fail(ErrorCode::HorizonZero, "horizon must be at least one step");
  // Calibration is always run attack-free.
  Simulator sim(s.model, s.step, attack::None{}, s.detector, s.seed, s.initial);
  std::vector<double> yf;
  yf.reserve(s.horizon);
  for (std::size_t i = 0; i < s.horizon; ++i) yf.push_back(*sim.step().yf);
  return calibrate_af(yf, settle_time, s.step);
}

}  // namespace resdet
