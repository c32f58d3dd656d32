#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace resdet {

enum class ErrorCode {
  DimensionMismatch,
  UnstableClosedLoop,
  NonPSDNoise,
  NonPositiveStep,
  SingularResidualCovariance,
  HorizonZero,
  NotHurwitz,
  NotSchur,
  NumericallySingular,
  WrongPlantClass,
  DomainError,
  TraceTooShort,
  ZeroPlantParameter,
  MissingAttackerKnowledge,
  NonPSD,
  ParseError,
  SchemaError,
  ValidationError,
  IOError,
  UnknownCase,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace resdet
