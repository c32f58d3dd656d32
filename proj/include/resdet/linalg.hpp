#pragma once

#include <Eigen/Dense>

namespace resdet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// True if every eigenvalue of m has real part strictly below zero.
bool is_hurwitz(const Matrix& m);

/// True if the spectral radius of m is strictly below one.
bool is_schur(const Matrix& m);

/// Symmetry to `rel_tol` relative to the largest absolute entry.
bool is_symmetric(const Matrix& m, double rel_tol = 1e-12);

/// Symmetric and all eigenvalues >= -rel_tol * ||m||.
bool is_psd(const Matrix& m, double rel_tol = 1e-12);

/// Symmetric PSD square root via eigendecomposition. Eigenvalues that are
/// negative within -1e-12 * ||m|| are clamped to zero; larger negative
/// eigenvalues raise ErrorCode::NonPSD.
Matrix sqrt_psd(const Matrix& m);

}  // namespace resdet
