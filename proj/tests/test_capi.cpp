#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <string>

#include "resdet/resdet.h"

namespace {

const char* kScenario = R"({
  "model": {"A": [[0, 1], [-4, -20]], "B": [[0], [1]], "C": [[1, 0]],
            "K": [[1, 1]], "L": [[0], [2]], "noise_cov": 2},
  "step": 0.001,
  "horizon_steps": 20000,
  "seed": 3,
  "attack": {"type": "zero_alarm"}
})";

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::strcmp(resdet_version(), "0.1.0") == 0);
  CHECK(std::strcmp(resdet_status_name(RESDET_OK), "OK") == 0);
  CHECK(std::strcmp(resdet_status_name(RESDET_ERR_SCHEMA), "SchemaError") == 0);
  CHECK(std::strcmp(resdet_status_name(RESDET_ERR_UNKNOWN_CASE), "UnknownCase") == 0);
  CHECK(std::strcmp(resdet_status_name(RESDET_ERR_DIMENSION_MISMATCH), "DimensionMismatch") == 0);
  CHECK(resdet_is_config_error(RESDET_ERR_PARSE));
  CHECK_FALSE(resdet_is_config_error(RESDET_ERR_VALIDATION));
}

TEST_CASE("tune through the C API") {
  double alpha = 0;
  REQUIRE(resdet_tune_threshold(0.05, 1, &alpha) == RESDET_OK);
  CHECK(alpha == doctest::Approx(3.8415).epsilon(2e-5));
  CHECK(resdet_tune_threshold(0.0, 1, &alpha) == RESDET_ERR_DOMAIN);
  CHECK(std::string(resdet_last_error()).find("DomainError") == 0);
  CHECK(resdet_tune_threshold(0.05, 1, nullptr) == RESDET_ERR_INVALID_ARGUMENT);
}

TEST_CASE("scenario lifecycle and run") {
  resdet_scenario* sc = nullptr;
  REQUIRE(resdet_scenario_parse(kScenario, &sc) == RESDET_OK);
  int n = 0, m = 0, p = 0;
  CHECK(resdet_scenario_dims(sc, &n, &m, &p) == RESDET_OK);
  CHECK(n == 2);
  CHECK(m == 1);
  CHECK(p == 1);
  uint64_t seed = 0;
  CHECK(resdet_scenario_get_seed(sc, &seed) == RESDET_OK);
  CHECK(seed == 3);
  CHECK(resdet_scenario_set_seed(sc, 44) == RESDET_OK);
  CHECK(resdet_scenario_get_seed(sc, &seed) == RESDET_OK);
  CHECK(seed == 44);

  const auto dir = std::filesystem::temp_directory_path() / "resdet_capi_run";
  std::filesystem::remove_all(dir);
  CHECK(resdet_scenario_set_outputs(sc, 1, -1, -1) == RESDET_OK);
  resdet_report* rep = nullptr;
  REQUIRE(resdet_run(sc, dir.c_str(), &rep) == RESDET_OK);
  double rate = -1;
  CHECK(resdet_report_alarm_rate(rep, &rate) == RESDET_OK);
  CHECK(rate == 0.0);
  uint64_t alarms = 1, counted = 0;
  CHECK(resdet_report_alarms(rep, &alarms, &counted) == RESDET_OK);
  CHECK(alarms == 0);
  CHECK(counted == 20000);
  CHECK(std::string(resdet_report_text(rep)).find("seed=44\n") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "trace.csv"));
  CHECK(std::filesystem::exists(dir / "summary.json"));
  resdet_report_free(rep);
  resdet_scenario_free(sc);
  std::filesystem::remove_all(dir);
}

TEST_CASE("parse failures map to config statuses") {
  resdet_scenario* sc = reinterpret_cast<resdet_scenario*>(0x1);
  CHECK(resdet_scenario_parse("{ nope", &sc) == RESDET_ERR_PARSE);
  CHECK(sc == nullptr);
  CHECK(resdet_scenario_parse(R"({"omega": 1})", &sc) == RESDET_ERR_SCHEMA);
  CHECK(std::string(resdet_last_error()).find("/omega") != std::string::npos);
  CHECK(resdet_scenario_load("/nonexistent.json", &sc) == RESDET_ERR_IO);
  CHECK(resdet_scenario_parse(nullptr, &sc) == RESDET_ERR_INVALID_ARGUMENT);
}

TEST_CASE("validation failure status") {
  std::string text = kScenario;
  text.replace(text.find("0.001"), 5, "-1");
  resdet_scenario* sc = nullptr;
  CHECK(resdet_scenario_parse(text.c_str(), &sc) == RESDET_ERR_VALIDATION);
  CHECK(std::string(resdet_last_error()).find("NonPositiveStep") != std::string::npos);
}

TEST_CASE("reproduce through the C API") {
  const auto dir = std::filesystem::temp_directory_path() / "resdet_capi_repro";
  resdet_report* rep = nullptr;
  REQUIRE(resdet_reproduce("tuning_table", dir.c_str(), &rep) == RESDET_OK);
  CHECK(std::string(resdet_report_text(rep)).find("row=0.05,1,3.8415") != std::string::npos);
  double rate = 0;
  CHECK(resdet_report_alarm_rate(rep, &rate) == RESDET_ERR_INVALID_ARGUMENT);
  resdet_report_free(rep);
  CHECK(resdet_reproduce("nope", dir.c_str(), &rep) == RESDET_ERR_UNKNOWN_CASE);
  CHECK(rep == nullptr);
  std::filesystem::remove_all(dir);
}

TEST_CASE("calibrate alpha_f through the C API") {
  std::string text = kScenario;
  text.replace(text.find("\"attack\": {\"type\": \"zero_alarm\"}"),
               std::strlen("\"attack\": {\"type\": \"zero_alarm\"}"),
               "\"detector\": {\"type\": \"yf_threshold\"}");
  text.replace(text.find("\"noise_cov\": 2"), std::strlen("\"noise_cov\": 2"), "\"noise_cov\": 0.001");
  resdet_scenario* sc = nullptr;
  REQUIRE(resdet_scenario_parse(text.c_str(), &sc) == RESDET_OK);
  double af = 0;
  CHECK(resdet_calibrate_af(sc, 5.0, &af) == RESDET_OK);
  CHECK(af > 0.0);
  CHECK(resdet_calibrate_af(sc, 50.0, &af) == RESDET_ERR_TRACE_TOO_SHORT);
  resdet_scenario_free(sc);
}
