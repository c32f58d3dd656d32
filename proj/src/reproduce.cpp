// Built-in reproduction cases for the numerical example.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "resdet/error.hpp"
#include "resdet/harness.hpp"

namespace resdet {
namespace {

constexpr std::uint64_t kSeed = 20190601;
constexpr double kStep = 0.001;
constexpr std::size_t kResidualHorizon = 200000;
constexpr std::size_t kResidualDiscard = 20000;
constexpr double kCutoff = 12.0;
constexpr int kBins = 200;

constexpr double kObserverHorizon = 40.0;
constexpr double kOnset = 15.0;
constexpr double kAttackLevel = 0.1;
constexpr double kObserverNoise = 0.001;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_data(const std::filesystem::path& dir, const char* name) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IOError, "cannot create " + dir.string() + ": " + ec.message());
  std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IOError, "cannot write " + (dir / name).string());
  return out;
}

void close_data(std::ofstream& out, const std::filesystem::path& dir, const char* name) {
  out.flush();
  if (!out) fail(ErrorCode::IOError, "write failed for " + (dir / name).string());
}

struct ResidualRun {
  std::vector<double> z;    // sorted after collect()
  std::vector<double> r;    // first residual channel
  std::vector<double> rho;  // first filtered channel, filtered detector only
  std::size_t alarms = 0;
  double threshold = 0.0;

  double alarm_rate() const {
    return z.empty() ? 0.0 : static_cast<double>(alarms) / static_cast<double>(z.size());
  }
};

ResidualRun run_residual(const DetectorConfig& det, const AttackSpec& atk) {
  Simulator sim(example_plant(2.0), kStep, atk, det, kSeed);
  ResidualRun out;
  out.threshold = sim.threshold();
  const std::size_t kept = kResidualHorizon - kResidualDiscard;
  out.z.reserve(kept);
  out.r.reserve(kept);
  for (std::size_t k = 0; k < kResidualHorizon; ++k) {
    const StepRecord& rec = sim.step();
    if (k < kResidualDiscard) continue;
    out.z.push_back(rec.z);
    out.r.push_back(rec.r[0]);
    if (rec.rho) out.rho.push_back((*rec.rho)[0]);
    if (rec.alarm) ++out.alarms;
  }
  std::sort(out.z.begin(), out.z.end());
  return out;
}

DetectorConfig unfiltered() { return detector::ChiSquared{0.05, std::nullopt}; }

DetectorConfig filtered(double cutoff) {
  detector::FilteredChiSquared d;
  d.false_alarm_rate = 0.05;
  d.cutoff = cutoff;
  return d;
}

AttackSpec unit_attack() { return attack::Constant{Vector::Ones(1), 0.0}; }

struct ResidualSet {
  ResidualRun chi_nominal, chi_attack, filt_nominal, filt_attack;
};

ResidualSet residual_set() {
  return {run_residual(unfiltered(), attack::None{}), run_residual(unfiltered(), unit_attack()),
          run_residual(filtered(kCutoff), attack::None{}),
          run_residual(filtered(kCutoff), unit_attack())};
}

void residual_header(std::ostringstream& os, const char* id) {
  os << "case=" << id << '\n'
     << "model=A[[0,1],[-4,-20]] B[0;1] C[1,0] K[1,1] L[0;2] noise_cov=2\n"
     << "step=" << num(kStep) << '\n'
     << "horizon_steps=" << kResidualHorizon << '\n'
     << "transient_discard=" << kResidualDiscard << '\n'
     << "cutoff=" << num(kCutoff) << '\n'
     << "seed=" << kSeed << '\n'
     << "attack=constant level=1 from t=0\n"
     << "false_alarm_rate=0.05\n";
}

void alarm_lines(std::ostringstream& os, const ResidualSet& s) {
  os << "threshold=" << num(s.chi_nominal.threshold) << " paper=3.84\n"
     << "alarm_rate.chi_squared.nominal=" << num(s.chi_nominal.alarm_rate()) << " target=0.05\n"
     << "alarm_rate.chi_squared.attack=" << num(s.chi_attack.alarm_rate()) << " paper=0.07\n"
     << "alarm_rate.filtered.nominal=" << num(s.filt_nominal.alarm_rate()) << " target=0.05\n"
     << "alarm_rate.filtered.attack=" << num(s.filt_attack.alarm_rate())
     << " paper=0.55 (paper cutoff unstated)\n"
     << "ordering.filtered_over_unfiltered="
     << num(s.filt_attack.alarm_rate() / std::max(s.chi_attack.alarm_rate(), 1e-12)) << '\n';
}

std::string fig1_cdf(const std::filesystem::path& dir) {
  const ResidualSet s = residual_set();
  std::ostringstream os;
  residual_header(os, "fig1_cdf");
  alarm_lines(os, s);

  const double alpha = s.chi_nominal.threshold;
  const double div_chi =
      std::abs(empirical_cdf(s.chi_attack.z, alpha) - empirical_cdf(s.chi_nominal.z, alpha));
  const double div_filt =
      std::abs(empirical_cdf(s.filt_attack.z, alpha) - empirical_cdf(s.filt_nominal.z, alpha));
  os << "cdf_divergence_at_threshold.chi_squared=" << num(div_chi) << '\n'
     << "cdf_divergence_at_threshold.filtered=" << num(div_filt) << '\n'
     << "cdf_divergence_filtered_larger=" << (div_filt > div_chi ? "yes" : "no") << '\n';

  // Grid over the pooled range of all four samples.
  double hi = 0.0;
  for (const auto* run : {&s.chi_nominal, &s.chi_attack, &s.filt_nominal, &s.filt_attack}) {
    if (!run->z.empty() && std::isfinite(run->z.back())) hi = std::max(hi, run->z.back());
  }
  auto out = open_data(dir, "fig1_cdf.csv");
  out << "z,chi_squared_nominal,chi_squared_attack,filtered_nominal,filtered_attack\n";
  for (int i = 0; i <= kBins; ++i) {
    const double z = hi * i / kBins;
    out << full(z) << ',' << full(empirical_cdf(s.chi_nominal.z, z)) << ','
        << full(empirical_cdf(s.chi_attack.z, z)) << ','
        << full(empirical_cdf(s.filt_nominal.z, z)) << ','
        << full(empirical_cdf(s.filt_attack.z, z)) << '\n';
  }
  close_data(out, dir, "fig1_cdf.csv");

  // Cutoff sensitivity of the filtered detector under the same attack.
  auto sweep = open_data(dir, "fig1_cutoff_sweep.csv");
  sweep << "cutoff,alarm_rate_nominal,alarm_rate_attack\n";
  for (double wc : {5.0, 12.0, 50.0, 135.0}) {
    const double nominal = run_residual(filtered(wc), attack::None{}).alarm_rate();
    const double attacked = run_residual(filtered(wc), unit_attack()).alarm_rate();
    sweep << full(wc) << ',' << full(nominal) << ',' << full(attacked) << '\n';
    os << "sweep.cutoff=" << num(wc) << " alarm_rate.nominal=" << num(nominal)
       << " alarm_rate.attack=" << num(attacked) << '\n';
  }
  close_data(sweep, dir, "fig1_cutoff_sweep.csv");
  os << "files=fig1_cdf.csv,fig1_cutoff_sweep.csv\n";
  return os.str();
}

void write_pdf(std::ostream& out, const char* name, const std::vector<double>& nominal,
               const std::vector<double>& attacked) {
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto* v : {&nominal, &attacked}) {
    for (double x : *v) {
      if (!std::isfinite(x)) continue;
      if (!any) lo = hi = x, any = true;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  const double width = hi > lo ? (hi - lo) / kBins : 1.0;
  auto density = [&](const std::vector<double>& v) {
    std::vector<double> d(kBins, 0.0);
    for (double x : v) {
      if (!std::isfinite(x)) continue;
      auto i = static_cast<std::size_t>((x - lo) / width);
      if (i >= d.size()) i = d.size() - 1;
      d[i] += 1.0;
    }
    for (double& c : d) c /= static_cast<double>(v.size()) * width;
    return d;
  };
  const auto dn = density(nominal);
  const auto da = density(attacked);
  for (int i = 0; i < kBins; ++i) {
    out << name << ',' << full(lo + width * (i + 0.5)) << ',' << full(dn[i]) << ','
        << full(da[i]) << '\n';
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
}

std::string fig2_pdf(const std::filesystem::path& dir) {
  const ResidualSet s = residual_set();
  std::ostringstream os;
  residual_header(os, "fig2_pdf");
  alarm_lines(os, s);

  // Shift of the mean in units of the nominal spread.
  const double sep_r = (mean_of(s.chi_attack.r) - mean_of(s.chi_nominal.r)) / sd_of(s.chi_nominal.r);
  const double sep_rho =
      (mean_of(s.filt_attack.rho) - mean_of(s.filt_nominal.rho)) / sd_of(s.filt_nominal.rho);
  os << "residual.sd_nominal=" << num(sd_of(s.chi_nominal.r)) << '\n'
     << "filtered.sd_nominal=" << num(sd_of(s.filt_nominal.rho)) << '\n'
     << "separation.residual=" << num(sep_r) << '\n'
     << "separation.filtered=" << num(sep_rho) << '\n';

  auto out = open_data(dir, "fig2_pdf.csv");
  out << "signal,value,pdf_nominal,pdf_attack\n";
  write_pdf(out, "r", s.chi_nominal.r, s.chi_attack.r);
  write_pdf(out, "rho", s.filt_nominal.rho, s.filt_attack.rho);
  close_data(out, dir, "fig2_pdf.csv");

  auto zout = open_data(dir, "fig2_z_pdf.csv");
  zout << "signal,value,pdf_nominal,pdf_attack\n";
  write_pdf(zout, "z_chi_squared", s.chi_nominal.z, s.chi_attack.z);
  write_pdf(zout, "z_filtered", s.filt_nominal.z, s.filt_attack.z);
  close_data(zout, dir, "fig2_z_pdf.csv");
  os << "files=fig2_pdf.csv,fig2_z_pdf.csv\n";
  return os.str();
}

struct ObserverRun {
  std::vector<double> t, yf;
  std::vector<bool> alarm;
};

ObserverRun run_observer(double noise, const AttackSpec& atk, std::optional<double> alpha_f,
                         std::uint64_t seed) {
  detector::YfThreshold det;
  det.alpha_f = alpha_f;
  det.cutoff = kCutoff;
  const auto steps = static_cast<std::size_t>(std::llround(kObserverHorizon / kStep));
  Simulator sim(example_plant(noise), kStep, atk, det, seed);
  ObserverRun out;
  out.t.reserve(steps);
  out.yf.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const StepRecord& rec = sim.step();
    out.t.push_back(rec.t);
    out.yf.push_back(*rec.yf);
    out.alarm.push_back(rec.alarm);
  }
  return out;
}

double predicted_sinusoid(double t) {
  if (t <= kOnset) return 0.0;
  return predict_yf(kAttackLevel * std::sin(t), kAttackLevel * std::cos(t),
                    -kAttackLevel * std::sin(t), 4.0, 20.0);
}

double predicted_constant(double t) {
  return t <= kOnset ? 0.0 : predict_yf(kAttackLevel, 0.0, 0.0, 4.0, 20.0);
}

std::optional<double> first_alarm_after(const ObserverRun& run, double onset) {
  for (std::size_t i = 0; i < run.t.size(); ++i) {
    if (run.t[i] > onset && run.alarm[i]) return run.t[i];
  }
  return std::nullopt;
}

std::string fig3_residuals(const std::filesystem::path& dir) {
  const AttackSpec sinusoid = attack::Sinusoid{Vector::Constant(1, kAttackLevel), 1.0, kOnset};
  const AttackSpec constant = attack::Constant{Vector::Constant(1, kAttackLevel), kOnset};

  const ObserverRun sin_run = run_observer(0.0, sinusoid, std::nullopt, kSeed);
  const ObserverRun const_run = run_observer(0.0, constant, std::nullopt, kSeed);

  double steady = 0.0;
  std::size_t steady_n = 0;
  double err2 = 0.0;
  std::size_t err_n = 0;
  auto out = open_data(dir, "fig3_residuals.csv");
  out << "t,yf_sinusoid,predicted_sinusoid,yf_constant,predicted_constant\n";
  for (std::size_t i = 0; i < sin_run.t.size(); ++i) {
    const double t = sin_run.t[i];
    out << full(t) << ',' << full(sin_run.yf[i]) << ',' << full(predicted_sinusoid(t)) << ','
        << full(const_run.yf[i]) << ',' << full(predicted_constant(t)) << '\n';
    if (t >= 35.0) {
      steady += const_run.yf[i];
      ++steady_n;
    }
    if (t >= 20.0) {
      const double d = sin_run.yf[i] - predicted_sinusoid(t);
      err2 += d * d;
      ++err_n;
    }
  }
  close_data(out, dir, "fig3_residuals.csv");
  steady /= static_cast<double>(steady_n);
  const double rms = std::sqrt(err2 / static_cast<double>(err_n));
  const double amplitude = std::hypot(0.3, 2.0);

  std::ostringstream os;
  os << "case=fig3_residuals\n"
     << "model=A[[0,1],[-4,-20]] B[0;1] C[1,0] K[1,1]\n"
     << "observer_gains=c1=5 c2=5 c3=12\n"
     << "cutoff=" << num(kCutoff) << '\n'
     << "step=" << num(kStep) << " integrator=rk4\n"
     << "duration=" << num(kObserverHorizon) << '\n'
     << "attack_onset=" << num(kOnset) << '\n'
     << "constant.steady_yf=" << num(steady) << " predicted=0.4\n"
     << "constant.steady_yf_rel_error=" << num(std::abs(steady - 0.4) / 0.4) << '\n'
     << "constant.reconstructed_level=" << num(reconstruct_constant_attack(steady, 4.0))
     << " true=0.1\n"
     << "sinusoid.rms_error=" << num(rms) << " window=[20,40]\n"
     << "sinusoid.rms_error_rel_amplitude=" << num(rms / amplitude) << " amplitude="
     << num(amplitude) << '\n';

  // Noisy detector: calibrate on an attack-free run, then attack.
  const ObserverRun calib = run_observer(kObserverNoise, attack::None{}, std::nullopt, kSeed);
  const double alpha_f = calibrate_af(calib.yf, 5.0, kStep);
  os << "noisy.noise_cov=" << num(kObserverNoise) << '\n'
     << "noisy.alpha_f=" << num(alpha_f) << " paper=1.55 settle=5\n";
  const std::uint64_t attack_seed = kSeed + 1;
  for (const auto& [name, spec] : {std::pair{"sinusoid", sinusoid}, std::pair{"constant", constant}}) {
    const ObserverRun run = run_observer(kObserverNoise, spec, alpha_f, attack_seed);
    const auto first = first_alarm_after(run, kOnset);
    os << "noisy." << name << ".first_alarm=" << (first ? num(*first) : std::string("none"))
       << '\n';
  }
  os << "files=fig3_residuals.csv\n";
  return os.str();
}

std::string tuning_table(const std::filesystem::path& dir) {
  std::ostringstream os;
  os << "case=tuning_table\n";
  auto out = open_data(dir, "tuning_table.csv");
  out << "false_alarm_rate,sensors,alpha\n";
  for (double rate : {0.01, 0.05, 0.1, 0.2}) {
    for (int p = 1; p <= 4; ++p) {
      const double alpha = tune_threshold(rate, p);
      out << num(rate) << ',' << p << ',' << full(alpha) << '\n';
      char line[128];
      std::snprintf(line, sizeof line, "row=%g,%d,%.4f", rate, p, alpha);
      os << line;
      if (rate == 0.05 && p == 1) os << " paper=3.84";
      os << '\n';
    }
  }
  close_data(out, dir, "tuning_table.csv");
  os << "files=tuning_table.csv\n";
  return os.str();
}

}  // namespace

std::string reproduce(const std::string& case_id, const std::filesystem::path& out_dir) {
  if (case_id == "fig1_cdf") return fig1_cdf(out_dir);
  if (case_id == "fig2_pdf") return fig2_pdf(out_dir);
  if (case_id == "fig3_residuals") return fig3_residuals(out_dir);
  if (case_id == "tuning_table") return tuning_table(out_dir);
  fail(ErrorCode::UnknownCase,
       "unknown case \"" + case_id + "\" (fig1_cdf, fig2_pdf, fig3_residuals, tuning_table)");
}

}  // namespace resdet
