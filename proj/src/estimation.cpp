#include "resdet/estimation.hpp"

#include <cmath>

#include "resdet/error.hpp"

namespace resdet {
namespace {

// vec() stacks columns; vec(A X B) = (B' kron A) vec(X).
Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix solve_vectorized(const Matrix& system, const Matrix& rhs_matrix) {
  const auto n = rhs_matrix.rows();
  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) {
    fail(ErrorCode::NumericallySingular, "Kronecker system is numerically singular");
  }
  const Vector rhs = Eigen::Map<const Vector>(rhs_matrix.data(), rhs_matrix.size());
  Vector sol = lu.solve(rhs);
  // One step of iterative refinement keeps the residual at round-off level.
  sol += lu.solve(rhs - system * sol);
  Matrix P = Eigen::Map<Matrix>(sol.data(), n, n);
  return 0.5 * (P + P.transpose());
}

void check_square_pair(const Matrix& A, const Matrix& Q) {
  if (A.rows() != A.cols() || Q.rows() != Q.cols() || A.rows() != Q.rows()) {
    fail(ErrorCode::DimensionMismatch, "Lyapunov operands must be square and of equal size");
  }
  if (!is_symmetric(Q, 1e-10)) fail(ErrorCode::DomainError, "forcing term is not symmetric");
}

}  // namespace

Matrix solve_lyapunov_continuous(const Matrix& A, const Matrix& Q) {
  check_square_pair(A, Q);
  if (!is_hurwitz(A)) fail(ErrorCode::NotHurwitz, "closed-loop matrix is not Hurwitz");
  const auto n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix system = kron(I, A) + kron(A, I);
  return solve_vectorized(system, -Q);
}

Matrix solve_lyapunov_discrete(const Matrix& Phi, const Matrix& Q) {
  check_square_pair(Phi, Q);
  if (!is_schur(Phi)) fail(ErrorCode::NotSchur, "transition matrix is not Schur stable");
  const auto n = Phi.rows();
  const Matrix system = Matrix::Identity(n * n, n * n) - kron(Phi, Phi);
  return solve_vectorized(system, Q);
}

double sign(double x) noexcept {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return -1.0;
  return 0.0;
}

DiscObserverGains disc_observer_gains(const Matrix& A, const Matrix& B, const Matrix& C,
                                      double c1, double c2, double c3) {
  const bool shape_ok = A.rows() == 2 && A.cols() == 2 && B.rows() == 2 && B.cols() == 1 &&
                        C.rows() == 1 && C.cols() == 2;
  if (!shape_ok || A(0, 0) != 0.0 || A(0, 1) != 1.0 || B(0, 0) != 0.0 || B(1, 0) != 1.0 ||
      C(0, 0) != 1.0 || C(0, 1) != 0.0) {
    fail(ErrorCode::WrongPlantClass,
         "discontinuous observer needs A=[[0,1],[-a,-b]], B=[0;1], C=[1,0]");
  }
  if (!(c1 > 0.0 && c2 > 0.0 && c3 > 0.0)) {
    fail(ErrorCode::DomainError, "observer gains c1, c2, c3 must be positive");
  }
  return DiscObserverGains{c1, c2, c3, -A(1, 0), -A(1, 1)};
}

DiscObserverState disc_observer_step(const DiscObserverState& state, double ybar, double u,
                                     const DiscObserverGains& g, double step) {
  if (!(step > 0.0)) fail(ErrorCode::NonPositiveStep, "integrator step must be positive");

  double sw[4];
  int stage = 0;
  auto rhs = [&](double x1, double x2, double& d1, double& d2) {
    const double e1 = ybar - x1;
    sw[stage++] = g.c3 * sign(e1);
    d1 = x2 + g.c1 * e1;
    d2 = -g.a * x1 - g.b * x2 + u + g.c2 * e1 + sw[stage - 1];
  };

  const double h = step;
  double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
  rhs(state.xhat1, state.xhat2, k1a, k1b);
  rhs(state.xhat1 + 0.5 * h * k1a, state.xhat2 + 0.5 * h * k1b, k2a, k2b);
  rhs(state.xhat1 + 0.5 * h * k2a, state.xhat2 + 0.5 * h * k2b, k3a, k3b);
  rhs(state.xhat1 + h * k3a, state.xhat2 + h * k3b, k4a, k4b);

  DiscObserverState next;
  next.e1 = ybar - state.xhat1;
  next.s = g.c3 * sign(next.e1);
  next.s_applied = (sw[0] + 2.0 * sw[1] + 2.0 * sw[2] + sw[3]) / 6.0;
  next.xhat1 = state.xhat1 + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
  next.xhat2 = state.xhat2 + h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
  return next;
}

}  // namespace resdet
