#pragma once

#include "resdet/linalg.hpp"

namespace resdet {

/// Solves 0 = A P + P A' + Q for Hurwitz A by Kronecker vectorization.
Matrix solve_lyapunov_continuous(const Matrix& A, const Matrix& Q);

/// Solves 0 = Phi P Phi' - P + Q for Schur Phi by Kronecker vectorization.
Matrix solve_lyapunov_discrete(const Matrix& Phi, const Matrix& Q);

/// -1, 0 or +1.
double sign(double x) noexcept;

// Discontinuous (sliding-mode) observer for the second-order class
//   x1' = x2,  x2' = -a x1 - b x2 + u,  y = x1.
// The correction injects the output error e1 = ybar - xhat1 linearly through
// c1, c2 and through the switching term c3 sign(e1) on the second channel.

struct DiscObserverGains {
  double c1 = 5.0;
  double c2 = 5.0;
  double c3 = 12.0;
  double a = 4.0;
  double b = 20.0;
};

struct DiscObserverState {
  double xhat1 = 0.0;
  double xhat2 = 0.0;
  double e1 = 0.0;  // ybar - xhat1 at the start of the last step
  double s = 0.0;   // c3 sign(e1) at the start of the last step
  /// RK4-weighted mean of c3 sign(e1) over the stages of the last step: the
  /// switching input actually integrated.
  double s_applied = 0.0;
};

/// Extracts (a, b) from A = [[0,1],[-a,-b]] after checking n=2, m=1, p=1,
/// B = [0;1], C = [1,0]. Throws WrongPlantClass otherwise.
DiscObserverGains disc_observer_gains(const Matrix& A, const Matrix& B, const Matrix& C,
                                      double c1, double c2, double c3);

/// One fixed-step RK4 step with ybar and u held over the step. e1 is
/// re-evaluated at each stage; e1 and s in the result describe the start of
/// the step.
DiscObserverState disc_observer_step(const DiscObserverState& state, double ybar, double u,
                                     const DiscObserverGains& gains, double step);

}  // namespace resdet
