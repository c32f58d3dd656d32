// Strict scenario documents.
//
// Layout (all keys optional unless marked):
//   model            object (required): A, B, C, K, L (matrices), noise_cov
//   step             number (required), seconds
//   horizon_steps | horizon_seconds   exactly one (required)
//   seed             unsigned integer
//   transient_discard  steps; defaults per detector
//   initial_state, initial_estimate   vectors
//   attack           object with "type"
//   detector         object with "type"
//   outputs          {trace, histogram, raw_z, bins}
// Matrices are arrays of rows; a bare number stands for a 1x1 matrix.

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "resdet/error.hpp"
#include "resdet/harness.hpp"

namespace resdet {
namespace {

using json = nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void schema(const std::string& path, const std::string& what) {
  fail(ErrorCode::SchemaError, path + ": " + what);
}

void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) schema(path, "expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) schema(path + "/" + item.key(), "unknown key");
  }
}

const json& required(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) schema(path + "/" + key, "missing required key");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) schema(path, "expected a number");
  return v.get<double>();
}

bool boolean(const json& v, const std::string& path) {
  if (!v.is_boolean()) schema(path, "expected true or false");
  return v.get<bool>();
}

std::uint64_t unsigned_int(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  schema(path, "expected a non-negative integer");
}

std::string string(const json& v, const std::string& path) {
  if (!v.is_string()) schema(path, "expected a string");
  return v.get<std::string>();
}

Vector vector(const json& v, const std::string& path) {
  if (v.is_number()) return Vector::Constant(1, v.get<double>());
  if (!v.is_array() || v.empty()) schema(path, "expected a non-empty array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = number(v[i], path + "/" + std::to_string(i));
  }
  return out;
}

Matrix matrix(const json& v, const std::string& path) {
  if (v.is_number()) return Matrix::Constant(1, 1, v.get<double>());
  if (!v.is_array() || v.empty()) schema(path, "expected an array of rows");
  const auto rows = v.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].empty()) schema(path + "/" + std::to_string(i), "expected a row array");
    if (i == 0) cols = v[i].size();
    if (v[i].size() != cols) schema(path + "/" + std::to_string(i), "ragged matrix row");
  }
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          number(v[i][j], path + "/" + std::to_string(i) + "/" + std::to_string(j));
    }
  }
  return out;
}

PlantModel parse_model(const json& v, const std::string& path) {
  allow_keys(v, path, {"A", "B", "C", "K", "L", "noise_cov"});
  PlantModel m;
  m.A = matrix(required(v, path, "A"), path + "/A");
  m.B = matrix(required(v, path, "B"), path + "/B");
  m.C = matrix(required(v, path, "C"), path + "/C");
  m.K = matrix(required(v, path, "K"), path + "/K");
  m.L = matrix(required(v, path, "L"), path + "/L");
  m.noise_cov = matrix(required(v, path, "noise_cov"), path + "/noise_cov");
  return m;
}

attack::ZeroAlarmPolicy parse_zero_alarm(const json& v, const std::string& path) {
  attack::ZeroAlarmPolicy p;
  if (v.contains("scale")) p.scale = number(v["scale"], path + "/scale");
  if (v.contains("direction")) p.direction = vector(v["direction"], path + "/direction");
  if (v.contains("margin")) p.margin = number(v["margin"], path + "/margin");
  return p;
}

attack::HiddenPolicy parse_hidden(const json& v, const std::string& path) {
  attack::HiddenPolicy p;
  if (v.contains("rate")) p.rate = number(v["rate"], path + "/rate");
  if (v.contains("direction")) p.direction = vector(v["direction"], path + "/direction");
  if (v.contains("law")) {
    const auto law = string(v["law"], path + "/law");
    if (law == "chi_squared") {
      p.law = attack::MagnitudeLaw::ChiSquared;
    } else if (law == "two_point") {
      p.law = attack::MagnitudeLaw::TwoPoint;
    } else {
      schema(path + "/law", "expected \"chi_squared\" or \"two_point\"");
    }
  }
  if (v.contains("spike_factor")) p.spike_factor = number(v["spike_factor"], path + "/spike_factor");
  return p;
}

AttackSpec parse_attack(const json& v, const std::string& path) {
  if (!v.is_object()) schema(path, "expected an object");
  const auto type = string(required(v, path, "type"), path + "/type");
  if (type == "none") {
    allow_keys(v, path, {"type"});
    return attack::None{};
  }
  if (type == "constant") {
    allow_keys(v, path, {"type", "level", "start_time"});
    attack::Constant a;
    a.level = vector(required(v, path, "level"), path + "/level");
    if (v.contains("start_time")) a.start_time = number(v["start_time"], path + "/start_time");
    return a;
  }
  if (type == "sinusoid") {
    allow_keys(v, path, {"type", "amplitude", "frequency", "start_time"});
    attack::Sinusoid a;
    a.amplitude = vector(required(v, path, "amplitude"), path + "/amplitude");
    if (v.contains("frequency")) a.frequency = number(v["frequency"], path + "/frequency");
    if (v.contains("start_time")) a.start_time = number(v["start_time"], path + "/start_time");
    return a;
  }
  if (type == "zero_alarm") {
    allow_keys(v, path, {"type", "scale", "direction", "margin"});
    return attack::ZeroAlarm{parse_zero_alarm(v, path)};
  }
  if (type == "hidden") {
    allow_keys(v, path, {"type", "rate", "direction", "law", "spike_factor"});
    return attack::Hidden{parse_hidden(v, path)};
  }
  if (type == "filtered_zero_alarm") {
    allow_keys(v, path, {"type", "scale", "direction", "margin", "cutoff", "alternating"});
    attack::FilteredZeroAlarm a;
    a.policy = parse_zero_alarm(v, path);
    if (v.contains("cutoff")) a.cutoff = number(v["cutoff"], path + "/cutoff");
    if (v.contains("alternating")) a.alternating = boolean(v["alternating"], path + "/alternating");
    return a;
  }
  if (type == "filtered_hidden") {
    allow_keys(v, path, {"type", "rate", "direction", "law", "spike_factor", "cutoff"});
    attack::FilteredHidden a;
    a.policy = parse_hidden(v, path);
    if (v.contains("cutoff")) a.cutoff = number(v["cutoff"], path + "/cutoff");
    return a;
  }
  schema(path + "/type", "unknown attack type \"" + type + "\"");
}

DetectorConfig parse_detector(const json& v, const std::string& path) {
  if (!v.is_object()) schema(path, "expected an object");
  const auto type = string(required(v, path, "type"), path + "/type");
  if (type == "chi_squared") {
    allow_keys(v, path, {"type", "false_alarm_rate", "alpha"});
    detector::ChiSquared d;
    if (v.contains("false_alarm_rate")) {
      d.false_alarm_rate = number(v["false_alarm_rate"], path + "/false_alarm_rate");
    }
    if (v.contains("alpha")) d.alpha = number(v["alpha"], path + "/alpha");
    return d;
  }
  if (type == "filtered_chi_squared") {
    allow_keys(v, path, {"type", "false_alarm_rate", "alpha", "cutoff", "covariance"});
    detector::FilteredChiSquared d;
    if (v.contains("false_alarm_rate")) {
      d.false_alarm_rate = number(v["false_alarm_rate"], path + "/false_alarm_rate");
    }
    if (v.contains("alpha")) d.alpha = number(v["alpha"], path + "/alpha");
    if (v.contains("cutoff")) d.cutoff = number(v["cutoff"], path + "/cutoff");
    if (v.contains("covariance")) {
      const auto mode = string(v["covariance"], path + "/covariance");
      if (mode == "closed_form") {
        d.mode = FilteredCovarianceMode::ClosedForm;
      } else if (mode == "exact") {
        d.mode = FilteredCovarianceMode::ExactRational;
      } else {
        schema(path + "/covariance", "expected \"closed_form\" or \"exact\"");
      }
    }
    return d;
  }
  if (type == "yf_threshold") {
    allow_keys(v, path, {"type", "alpha_f", "cutoff", "c1", "c2", "c3"});
    detector::YfThreshold d;
    if (v.contains("alpha_f")) d.alpha_f = number(v["alpha_f"], path + "/alpha_f");
    if (v.contains("cutoff")) d.cutoff = number(v["cutoff"], path + "/cutoff");
    if (v.contains("c1")) d.c1 = number(v["c1"], path + "/c1");
    if (v.contains("c2")) d.c2 = number(v["c2"], path + "/c2");
    if (v.contains("c3")) d.c3 = number(v["c3"], path + "/c3");
    return d;
  }
  schema(path + "/type", "unknown detector type \"" + type + "\"");
}

OutputOptions parse_outputs(const json& v, const std::string& path) {
  allow_keys(v, path, {"trace", "histogram", "raw_z", "bins"});
  OutputOptions o;
  if (v.contains("trace")) o.trace = boolean(v["trace"], path + "/trace");
  if (v.contains("histogram")) o.histogram = boolean(v["histogram"], path + "/histogram");
  if (v.contains("raw_z")) o.raw_z = boolean(v["raw_z"], path + "/raw_z");
  if (v.contains("bins")) {
    const auto bins = unsigned_int(v["bins"], path + "/bins");
    if (bins < 1 || bins > 100000) schema(path + "/bins", "bins must lie in [1, 100000]");
    o.bins = static_cast<int>(bins);
  }
  return o;
}

void line_column(const std::string& text, std::size_t offset, std::size_t& line, std::size_t& col) {
  line = 1;
  col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
}

void validate(const Scenario& s) {
  try {
    if (!(s.step > 0.0) || !std::isfinite(s.step)) {
      fail(ErrorCode::NonPositiveStep, "step must be positive and finite");
    }
    if (s.horizon == 0) fail(ErrorCode::HorizonZero, "horizon must be at least one step");
    if (s.transient_discard > s.horizon) {
      fail(ErrorCode::DomainError, "transient_discard exceeds the horizon");
    }
    // Building a simulator runs every component's own validation.
    Simulator probe(s.model, s.step, s.attack, s.detector, s.seed, s.initial);
    if (is_stealthy(s.attack) && !probe.closed_loop()) {
      fail(ErrorCode::MissingAttackerKnowledge,
           "stealthy attacks need a residual detector (chi_squared or filtered_chi_squared)");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaError || e.code() == ErrorCode::ParseError) throw;
    fail(ErrorCode::ValidationError, e.what());
  }
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

void zero_alarm_json(json& j, const attack::ZeroAlarmPolicy& p) {
  j["scale"] = p.scale;
  j["margin"] = p.margin;
  if (p.direction) j["direction"] = vector_json(*p.direction);
}

void hidden_json(json& j, const attack::HiddenPolicy& p) {
  j["rate"] = p.rate;
  j["law"] = p.law == attack::MagnitudeLaw::ChiSquared ? "chi_squared" : "two_point";
  j["spike_factor"] = p.spike_factor;
  if (p.direction) j["direction"] = vector_json(*p.direction);
}

}  // namespace

std::size_t default_transient_discard(const DetectorConfig& detector, double step) {
  if (const auto* f = std::get_if<detector::FilteredChiSquared>(&detector)) {
    if (f->cutoff > 0.0 && step > 0.0) {
      return static_cast<std::size_t>(std::ceil(10.0 / (f->cutoff * step)));
    }
  }
  return 0;
}

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 0, col = 0;
    line_column(text, e.byte > 0 ? e.byte - 1 : 0, line, col);
    fail(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " +
                                    std::to_string(col) + ": " + e.what());
  }

  const std::string root;
  allow_keys(doc, root, {"model", "step", "horizon_steps", "horizon_seconds", "seed",
                         "transient_discard", "initial_state", "initial_estimate", "attack",
                         "detector", "outputs"});
  Scenario s;
  s.model = parse_model(required(doc, root, "model"), "/model");
  s.step = number(required(doc, root, "step"), "/step");

  const bool has_steps = doc.contains("horizon_steps");
  const bool has_seconds = doc.contains("horizon_seconds");
  if (has_steps == has_seconds) {
    schema("/horizon_steps", "give exactly one of horizon_steps or horizon_seconds");
  }
  if (has_steps) {
    s.horizon = unsigned_int(doc["horizon_steps"], "/horizon_steps");
  } else {
    const double seconds = number(doc["horizon_seconds"], "/horizon_seconds");
    s.horizon = (seconds > 0.0 && s.step > 0.0)
                    ? static_cast<std::size_t>(std::llround(seconds / s.step))
                    : 0;
  }
  if (doc.contains("seed")) s.seed = unsigned_int(doc["seed"], "/seed");
  if (doc.contains("attack")) s.attack = parse_attack(doc["attack"], "/attack");
  if (doc.contains("detector")) s.detector = parse_detector(doc["detector"], "/detector");
  s.transient_discard = doc.contains("transient_discard")
                            ? unsigned_int(doc["transient_discard"], "/transient_discard")
                            : default_transient_discard(s.detector, s.step);
  if (doc.contains("initial_state")) s.initial.x0 = vector(doc["initial_state"], "/initial_state");
  if (doc.contains("initial_estimate")) {
    s.initial.xhat0 = vector(doc["initial_estimate"], "/initial_estimate");
  }
  if (doc.contains("outputs")) s.outputs = parse_outputs(doc["outputs"], "/outputs");

  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IOError, "cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& s) {
  json doc;
  doc["model"] = {{"A", matrix_json(s.model.A)},         {"B", matrix_json(s.model.B)},
                  {"C", matrix_json(s.model.C)},         {"K", matrix_json(s.model.K)},
                  {"L", matrix_json(s.model.L)},         {"noise_cov", matrix_json(s.model.noise_cov)}};
  doc["step"] = s.step;
  doc["horizon_steps"] = s.horizon;
  doc["seed"] = s.seed;
  doc["transient_discard"] = s.transient_discard;
  if (s.initial.x0) doc["initial_state"] = vector_json(*s.initial.x0);
  if (s.initial.xhat0) doc["initial_estimate"] = vector_json(*s.initial.xhat0);

  json a;
  a["type"] = attack_id(s.attack);
  std::visit(overloaded{
                 [](const attack::None&) {},
                 [&](const attack::Constant& c) {
                   a["level"] = vector_json(c.level);
                   a["start_time"] = c.start_time;
                 },
                 [&](const attack::Sinusoid& c) {
                   a["amplitude"] = vector_json(c.amplitude);
                   a["frequency"] = c.frequency;
                   a["start_time"] = c.start_time;
                 },
                 [&](const attack::ZeroAlarm& c) { zero_alarm_json(a, c.policy); },
                 [&](const attack::Hidden& c) { hidden_json(a, c.policy); },
                 [&](const attack::FilteredZeroAlarm& c) {
                   zero_alarm_json(a, c.policy);
                   a["cutoff"] = c.cutoff;
                   a["alternating"] = c.alternating;
                 },
                 [&](const attack::FilteredHidden& c) {
                   hidden_json(a, c.policy);
                   a["cutoff"] = c.cutoff;
                 },
             },
             s.attack);
  doc["attack"] = a;

  json d;
  d["type"] = detector_id(s.detector);
  std::visit(overloaded{
                 [&](const detector::ChiSquared& c) {
                   d["false_alarm_rate"] = c.false_alarm_rate;
                   if (c.alpha) d["alpha"] = *c.alpha;
                 },
                 [&](const detector::FilteredChiSquared& c) {
                   d["false_alarm_rate"] = c.false_alarm_rate;
                   if (c.alpha) d["alpha"] = *c.alpha;
                   d["cutoff"] = c.cutoff;
                   d["covariance"] =
                       c.mode == FilteredCovarianceMode::ClosedForm ? "closed_form" : "exact";
                 },
                 [&](const detector::YfThreshold& c) {
                   if (c.alpha_f) d["alpha_f"] = *c.alpha_f;
                   d["cutoff"] = c.cutoff;
                   d["c1"] = c.c1;
                   d["c2"] = c.c2;
                   d["c3"] = c.c3;
                 },
             },
             s.detector);
  doc["detector"] = d;
  doc["outputs"] = {{"trace", s.outputs.trace},
                    {"histogram", s.outputs.histogram},
                    {"raw_z", s.outputs.raw_z},
                    {"bins", s.outputs.bins}};
  return doc.dump(2) + "\n";
}

}  // namespace resdet
