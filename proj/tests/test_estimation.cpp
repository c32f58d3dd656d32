#include "doctest.h"

#include <Eigen/Eigenvalues>

#include "resdet/error.hpp"
#include "resdet/estimation.hpp"
#include "resdet/harness.hpp"

using namespace resdet;

namespace {

// P = int_0^inf exp(A t) Q exp(A' t) dt by RK4 on X' = A X + X A', P' = X.
Matrix lyapunov_quadrature(const Matrix& A, const Matrix& Q, double h, double T) {
  Matrix X = Q;
  Matrix P = Matrix::Zero(Q.rows(), Q.cols());
  auto f = [&](const Matrix& Y) -> Matrix { return A * Y + Y * A.transpose(); };
  const auto steps = static_cast<long>(T / h);
  for (long i = 0; i < steps; ++i) {
    const Matrix k1 = f(X);
    const Matrix k2 = f(X + 0.5 * h * k1);
    const Matrix k3 = f(X + 0.5 * h * k2);
    const Matrix k4 = f(X + h * k3);
    // Same stages integrate P.
    P += (h / 6.0) * (X + 2.0 * (X + 0.5 * h * k1) + 2.0 * (X + 0.5 * h * k2) + (X + h * k3));
    X += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return P;
}

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::DomainError;
}

}  // namespace

TEST_CASE("continuous lyapunov: trivial instances") {
  const Matrix I = Matrix::Identity(2, 2);
  CHECK(solve_lyapunov_continuous(-I, 2 * I).isApprox(I, 1e-14));
  CHECK(solve_lyapunov_continuous(-I, Matrix::Zero(2, 2)).norm() == 0.0);
}

TEST_CASE("continuous lyapunov matches the quadrature oracle on the example observer") {
  const PlantModel m = example_plant(2.0);
  const Matrix Acl = m.A - m.L * m.C;
  const Matrix Q = m.L * Matrix::Constant(1, 1, 2000.0) * m.L.transpose();
  const Matrix P = solve_lyapunov_continuous(Acl, Q);
  const Matrix oracle = lyapunov_quadrature(Acl, Q, 1e-3, 80.0);
  CHECK(rel(P, oracle) < 1e-3);
  CHECK((Acl * P + P * Acl.transpose() + Q).norm() < 1e-9 * Q.norm());
}

TEST_CASE("continuous lyapunov agrees with quadrature on random stable 2x2 instances") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n;
  int tested = 0;
  while (tested < 10) {
    Matrix A(2, 2);
    for (int i = 0; i < 4; ++i) A.data()[i] = n(rng);
    A -= 1.5 * Matrix::Identity(2, 2);
    if (!is_hurwitz(A)) continue;
    Eigen::EigenSolver<Matrix> es(A, false);
    if (es.eigenvalues().real().maxCoeff() > -0.2) continue;
    Matrix X(2, 2);
    for (int i = 0; i < 4; ++i) X.data()[i] = n(rng);
    const Matrix Q = X * X.transpose();
    const Matrix P = solve_lyapunov_continuous(A, Q);
    CHECK(rel(P, lyapunov_quadrature(A, Q, 1e-3, 80.0)) < 1e-3);
    CHECK(is_symmetric(P, 1e-12));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(P);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * P.norm());
    ++tested;
  }
}

TEST_CASE("continuous lyapunov rejects unstable input") {
  CHECK(code_of([] { solve_lyapunov_continuous(Matrix::Identity(2, 2), Matrix::Identity(2, 2)); }) ==
        ErrorCode::NotHurwitz);
}

TEST_CASE("discrete lyapunov: trivial and geometric-series instances") {
  const Matrix Q = Matrix::Identity(2, 2) * 3.0;
  CHECK(solve_lyapunov_discrete(Matrix::Zero(2, 2), Q).isApprox(Q));
  CHECK(solve_lyapunov_discrete(Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 3.0))(0, 0) ==
        doctest::Approx(4.0).epsilon(1e-14));
  CHECK(code_of([] {
          solve_lyapunov_discrete(Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0));
        }) == ErrorCode::NotSchur);
}

TEST_CASE("discrete lyapunov matches a truncated series") {
  Matrix Phi(2, 2);
  Phi << 0.9, 0.2, -0.1, 0.7;
  Matrix Q(2, 2);
  Q << 2.0, 0.3, 0.3, 1.0;
  Matrix S = Matrix::Zero(2, 2), term = Q;
  for (int k = 0; k < 2000; ++k) {
    S += term;
    term = Phi * term * Phi.transpose();
  }
  const Matrix P = solve_lyapunov_discrete(Phi, Q);
  CHECK(rel(P, S) < 1e-12);
  CHECK(is_symmetric(P, 1e-12));
}

TEST_CASE("sign") {
  CHECK(sign(-3.0) == -1.0);
  CHECK(sign(0.0) == 0.0);
  CHECK(sign(7.2) == 1.0);
}

TEST_CASE("observer gains from the canonical plant") {
  const PlantModel m = example_plant();
  const auto g = disc_observer_gains(m.A, m.B, m.C, 5, 5, 12);
  CHECK(g.a == 4.0);
  CHECK(g.b == 20.0);
  Matrix C2(1, 2);
  C2 << 0, 1;
  CHECK(code_of([&] { disc_observer_gains(m.A, m.B, C2, 5, 5, 12); }) ==
        ErrorCode::WrongPlantClass);
  CHECK(code_of([&] { disc_observer_gains(m.A, m.B, m.C, 5, 5, 0); }) == ErrorCode::DomainError);
}

TEST_CASE("observer sitting on a plant equilibrium stays there") {
  DiscObserverGains g;
  DiscObserverState s;
  s.xhat1 = 0.7;
  s.xhat2 = 0.0;
  for (int k = 0; k < 1000; ++k) {
    s = disc_observer_step(s, 0.7, g.a * 0.7, g, 0.001);
    CHECK(s.e1 == 0.0);
    CHECK(s.s == 0.0);
  }
  CHECK(s.xhat1 == 0.7);
  CHECK(s.xhat2 == 0.0);
}

TEST_CASE("positive output error switches to +c3") {
  DiscObserverGains g;
  DiscObserverState s;
  s = disc_observer_step(s, 0.5, 0.0, g, 0.001);
  CHECK(s.e1 == 0.5);
  CHECK(s.s == 12.0);
  s = DiscObserverState{};
  s = disc_observer_step(s, -0.5, 0.0, g, 0.001);
  CHECK(s.s == -12.0);
}

TEST_CASE("sliding surface is reached from a wrong initial estimate") {
  detector::YfThreshold det;
  SimulationOptions opt;
  opt.x0 = Vector::Zero(2);
  (*opt.x0)[0] = 1.0;
  (*opt.x0)[1] = -0.5;
  Simulator sim(example_plant(0.0), 0.001, attack::None{}, det, 1, opt);
  double worst_late = 0.0;
  double first_inside = -1.0;
  for (int k = 0; k < 20000; ++k) {
    const auto& rec = sim.step();
    const double e1 = std::abs(rec.r[0]);
    if (first_inside < 0 && e1 < 1e-3) first_inside = rec.t;
    if (rec.t > 5.0) worst_late = std::max(worst_late, e1);
  }
  CHECK(first_inside >= 0.0);
  CHECK(first_inside < 5.0);
  CHECK(worst_late < 1e-3);
}
