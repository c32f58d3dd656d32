#include "resdet/resdet.h"

#include <memory>
#include <new>
#include <optional>
#include <string>

#include "resdet/error.hpp"
#include "resdet/harness.hpp"

struct resdet_scenario {
  resdet::Scenario value;
};

struct resdet_report {
  std::string text;
  std::optional<resdet::RunReport> run;
};

namespace {

thread_local std::string last_error;

resdet_status to_status(resdet::ErrorCode code) {
  using resdet::ErrorCode;
  switch (code) {
    case ErrorCode::DimensionMismatch: return RESDET_ERR_DIMENSION_MISMATCH;
    case ErrorCode::UnstableClosedLoop: return RESDET_ERR_UNSTABLE_CLOSED_LOOP;
    case ErrorCode::NonPSDNoise: return RESDET_ERR_NON_PSD_NOISE;
    case ErrorCode::NonPositiveStep: return RESDET_ERR_NON_POSITIVE_STEP;
    case ErrorCode::SingularResidualCovariance: return RESDET_ERR_SINGULAR_RESIDUAL_COVARIANCE;
    case ErrorCode::HorizonZero: return RESDET_ERR_HORIZON_ZERO;
    case ErrorCode::NotHurwitz: return RESDET_ERR_NOT_HURWITZ;
    case ErrorCode::NotSchur: return RESDET_ERR_NOT_SCHUR;
    case ErrorCode::NumericallySingular: return RESDET_ERR_NUMERICALLY_SINGULAR;
    case ErrorCode::WrongPlantClass: return RESDET_ERR_WRONG_PLANT_CLASS;
    case ErrorCode::DomainError: return RESDET_ERR_DOMAIN;
    case ErrorCode::TraceTooShort: return RESDET_ERR_TRACE_TOO_SHORT;
    case ErrorCode::ZeroPlantParameter: return RESDET_ERR_ZERO_PLANT_PARAMETER;
    case ErrorCode::MissingAttackerKnowledge: return RESDET_ERR_MISSING_ATTACKER_KNOWLEDGE;
    case ErrorCode::NonPSD: return RESDET_ERR_NON_PSD;
    case ErrorCode::ParseError: return RESDET_ERR_PARSE;
    case ErrorCode::SchemaError: return RESDET_ERR_SCHEMA;
    case ErrorCode::ValidationError: return RESDET_ERR_VALIDATION;
    case ErrorCode::IOError: return RESDET_ERR_IO;
    case ErrorCode::UnknownCase: return RESDET_ERR_UNKNOWN_CASE;
  }
  return RESDET_ERR_INTERNAL;
}

resdet_status invalid(const char* what) {
  last_error = std::string("InvalidArgument: ") + what;
  return RESDET_ERR_INVALID_ARGUMENT;
}

template <class F>
resdet_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return RESDET_OK;
  } catch (const resdet::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "Internal: out of memory";
  } catch (const std::exception& e) {
    last_error = std::string("Internal: ") + e.what();
  } catch (...) {
    last_error = "Internal: unknown exception";
  }
  return RESDET_ERR_INTERNAL;
}

}  // namespace

extern "C" {

const char* resdet_version(void) { return "0.1.0"; }

const char* resdet_status_name(resdet_status status) {
  switch (status) {
    case RESDET_OK: return "OK";
    case RESDET_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case RESDET_ERR_INTERNAL: return "Internal";
    default: break;
  }
  if (status > RESDET_OK && status < RESDET_ERR_INVALID_ARGUMENT) {
    return resdet::to_string(static_cast<resdet::ErrorCode>(status - 1)).data();
  }
  return "Unknown";
}

const char* resdet_last_error(void) { return last_error.c_str(); }

int resdet_is_config_error(resdet_status status) {
  return status == RESDET_ERR_PARSE || status == RESDET_ERR_SCHEMA ||
         status == RESDET_ERR_UNKNOWN_CASE || status == RESDET_ERR_IO ||
         status == RESDET_ERR_INVALID_ARGUMENT;
}

resdet_status resdet_tune_threshold(double false_alarm_rate, int sensors, double* alpha) {
  if (!alpha) return invalid("alpha is NULL");
  return guarded([&] { *alpha = resdet::tune_threshold(false_alarm_rate, sensors); });
}

resdet_status resdet_scenario_load(const char* path, resdet_scenario** out) {
  if (!path || !out) return invalid("path or out is NULL");
  *out = nullptr;
  return guarded([&] { *out = new resdet_scenario{resdet::load_scenario(path)}; });
}

resdet_status resdet_scenario_parse(const char* text, resdet_scenario** out) {
  if (!text || !out) return invalid("text or out is NULL");
  *out = nullptr;
  return guarded([&] { *out = new resdet_scenario{resdet::parse_scenario(text)}; });
}

void resdet_scenario_free(resdet_scenario* scenario) { delete scenario; }

resdet_status resdet_scenario_set_seed(resdet_scenario* scenario, uint64_t seed) {
  if (!scenario) return invalid("scenario is NULL");
  scenario->value.seed = seed;
  last_error.clear();
  return RESDET_OK;
}

resdet_status resdet_scenario_get_seed(const resdet_scenario* scenario, uint64_t* seed) {
  if (!scenario || !seed) return invalid("scenario or seed is NULL");
  *seed = scenario->value.seed;
  last_error.clear();
  return RESDET_OK;
}

resdet_status resdet_scenario_set_outputs(resdet_scenario* scenario, int trace, int histogram,
                                          int raw_z) {
  if (!scenario) return invalid("scenario is NULL");
  auto& o = scenario->value.outputs;
  if (trace >= 0) o.trace = trace != 0;
  if (histogram >= 0) o.histogram = histogram != 0;
  if (raw_z >= 0) o.raw_z = raw_z != 0;
  last_error.clear();
  return RESDET_OK;
}

resdet_status resdet_scenario_dims(const resdet_scenario* scenario, int* n, int* m, int* p) {
  if (!scenario) return invalid("scenario is NULL");
  const auto& model = scenario->value.model;
  if (n) *n = static_cast<int>(model.n());
  if (m) *m = static_cast<int>(model.m());
  if (p) *p = static_cast<int>(model.p());
  last_error.clear();
  return RESDET_OK;
}

resdet_status resdet_run(const resdet_scenario* scenario, const char* out_dir,
                         resdet_report** out) {
  if (!scenario || !out) return invalid("scenario or out is NULL");
  *out = nullptr;
  return guarded([&] {
    std::optional<std::filesystem::path> dir;
    if (out_dir) dir = std::filesystem::path(out_dir);
    auto report = resdet::run_experiment(scenario->value, dir);
    report.z_samples.clear();
    report.z_samples.shrink_to_fit();
    auto handle = std::make_unique<resdet_report>();
    handle->text = resdet::format_summary(report);
    handle->run = std::move(report);
    *out = handle.release();
  });
}

resdet_status resdet_calibrate_af(const resdet_scenario* scenario, double settle_time,
                                  double* alpha_f) {
  if (!scenario || !alpha_f) return invalid("scenario or alpha_f is NULL");
  return guarded([&] { *alpha_f = resdet::calibrate_af(scenario->value, settle_time); });
}

resdet_status resdet_reproduce(const char* case_id, const char* out_dir, resdet_report** out) {
  if (!case_id || !out_dir || !out) return invalid("case_id, out_dir or out is NULL");
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<resdet_report>();
    handle->text = resdet::reproduce(case_id, out_dir);
    *out = handle.release();
  });
}

void resdet_report_free(resdet_report* report) { delete report; }

const char* resdet_report_text(const resdet_report* report) {
  return report ? report->text.c_str() : "";
}

resdet_status resdet_report_alarm_rate(const resdet_report* report, double* rate) {
  if (!report || !rate) return invalid("report or rate is NULL");
  if (!report->run) return invalid("report has no run statistics");
  *rate = report->run->alarm_rate;
  last_error.clear();
  return RESDET_OK;
}

resdet_status resdet_report_alarms(const resdet_report* report, uint64_t* alarms,
                                   uint64_t* counted_steps) {
  if (!report) return invalid("report is NULL");
  if (!report->run) return invalid("report has no run statistics");
  if (alarms) *alarms = report->run->alarms;
  if (counted_steps) *counted_steps = report->run->counted_steps;
  last_error.clear();
  return RESDET_OK;
}

}  // extern "C"
