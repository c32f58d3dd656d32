// resdet command line front end. Talks to the library only through resdet.h.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "resdet/resdet.h"

namespace {

constexpr int kConfigExit = 2;
constexpr int kNumericExit = 3;

int report_failure(resdet_status status) {
  std::fprintf(stderr, "error: %s\n", resdet_last_error());
  return resdet_is_config_error(status) ? kConfigExit : kNumericExit;
}

struct ScenarioHandle {
  resdet_scenario* ptr = nullptr;
  ~ScenarioHandle() { resdet_scenario_free(ptr); }
};

struct ReportHandle {
  resdet_report* ptr = nullptr;
  ~ReportHandle() { resdet_report_free(ptr); }
};

int cmd_tune(double rate, int sensors) {
  double alpha = 0.0;
  if (auto st = resdet_tune_threshold(rate, sensors, &alpha); st != RESDET_OK) {
    return report_failure(st);
  }
  std::printf("false_alarm_rate=%.10g\nsensors=%d\nalpha=%.10g\n", rate, sensors, alpha);
  return 0;
}

int cmd_simulate(const std::string& path, const uint64_t* seed, const std::string& trace_dir) {
  ScenarioHandle sc;
  if (auto st = resdet_scenario_load(path.c_str(), &sc.ptr); st != RESDET_OK) {
    return report_failure(st);
  }
  if (seed) resdet_scenario_set_seed(sc.ptr, *seed);
  const char* dir = nullptr;
  if (!trace_dir.empty()) {
    resdet_scenario_set_outputs(sc.ptr, 1, -1, -1);
    dir = trace_dir.c_str();
  }
  ReportHandle rep;
  if (auto st = resdet_run(sc.ptr, dir, &rep.ptr); st != RESDET_OK) return report_failure(st);
  std::fputs(resdet_report_text(rep.ptr), stdout);
  return 0;
}

int cmd_calibrate(const std::string& path, double settle) {
  ScenarioHandle sc;
  if (auto st = resdet_scenario_load(path.c_str(), &sc.ptr); st != RESDET_OK) {
    return report_failure(st);
  }
  double alpha_f = 0.0;
  if (auto st = resdet_calibrate_af(sc.ptr, settle, &alpha_f); st != RESDET_OK) {
    return report_failure(st);
  }
  std::printf("settle=%.10g\nalpha_f=%.10g\n", settle, alpha_f);
  return 0;
}

int cmd_reproduce(const std::string& id, const std::string& out) {
  ReportHandle rep;
  if (auto st = resdet_reproduce(id.c_str(), out.c_str(), &rep.ptr); st != RESDET_OK) {
    return report_failure(st);
  }
  std::fputs(resdet_report_text(rep.ptr), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual-based anomaly detection experiments"};
  app.set_version_flag("--version", std::string(resdet_version()));
  app.require_subcommand(1);

  double rate = 0.05;
  int sensors = 1;
  auto* tune = app.add_subcommand("tune", "chi-squared threshold for a false-alarm rate");
  tune->add_option("--false-alarm-rate", rate, "target false-alarm rate in (0,1]")->required();
  tune->add_option("--sensors", sensors, "number of sensors p")->required();

  std::string scenario_path;
  uint64_t seed = 0;
  std::string trace_dir;
  auto* sim = app.add_subcommand("simulate", "run a scenario and print the summary");
  sim->add_option("--scenario", scenario_path, "scenario file")->required();
  auto* seed_opt = sim->add_option("--seed", seed, "overrides the scenario seed");
  sim->add_option("--trace", trace_dir, "directory for trace.csv and summary.json");

  double settle = 5.0;
  auto* cal = app.add_subcommand("calibrate-af", "empirical alpha_f for a yf_threshold scenario");
  cal->add_option("--scenario", scenario_path, "scenario file")->required();
  cal->add_option("--settle", settle, "seconds ignored at the start")->required();

  std::string case_id;
  std::string out_dir;
  auto* rep = app.add_subcommand("reproduce", "built-in reproduction cases");
  rep->add_option("--case", case_id, "fig1_cdf, fig2_pdf, fig3_residuals or tuning_table")
      ->required();
  rep->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigExit;
  }

  if (*tune) return cmd_tune(rate, sensors);
  if (*sim) return cmd_simulate(scenario_path, seed_opt->count() ? &seed : nullptr, trace_dir);
  if (*cal) return cmd_calibrate(scenario_path, settle);
  return cmd_reproduce(case_id, out_dir);
}
