#include "resdet/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "resdet/error.hpp"

namespace resdet {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnstableClosedLoop: return "UnstableClosedLoop";
    case ErrorCode::NonPSDNoise: return "NonPSDNoise";
    case ErrorCode::NonPositiveStep: return "NonPositiveStep";
    case ErrorCode::SingularResidualCovariance: return "SingularResidualCovariance";
    case ErrorCode::HorizonZero: return "HorizonZero";
    case ErrorCode::NotHurwitz: return "NotHurwitz";
    case ErrorCode::NotSchur: return "NotSchur";
    case ErrorCode::NumericallySingular: return "NumericallySingular";
    case ErrorCode::WrongPlantClass: return "WrongPlantClass";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::TraceTooShort: return "TraceTooShort";
    case ErrorCode::ZeroPlantParameter: return "ZeroPlantParameter";
    case ErrorCode::MissingAttackerKnowledge: return "MissingAttackerKnowledge";
    case ErrorCode::NonPSD: return "NonPSD";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IOError: return "IOError";
    case ErrorCode::UnknownCase: return "UnknownCase";
  }
  return "Unknown";
}

bool is_hurwitz(const Matrix& m) {
  if (m.size() == 0) return true;
  Eigen::EigenSolver<Matrix> solver(m, false);
  return (solver.eigenvalues().real().array() < 0.0).all();
}

bool is_schur(const Matrix& m) {
  if (m.size() == 0) return true;
  Eigen::EigenSolver<Matrix> solver(m, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff() < 1.0;
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

bool is_psd(const Matrix& m, double rel_tol) {
  if (!is_symmetric(m)) return false;
  if (m.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  const double norm = m.norm();
  return solver.eigenvalues().minCoeff() >= -rel_tol * norm;
}

Matrix sqrt_psd(const Matrix& m) {
  if (!is_psd(m)) fail(ErrorCode::NonPSD, "matrix is not symmetric positive semidefinite");
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  Vector roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix& v = solver.eigenvectors();
  Matrix s = v * roots.asDiagonal() * v.transpose();
  return 0.5 * (s + s.transpose());
}

}  // namespace resdet
