#include "doctest.h"

#include <numbers>
#include <random>

#include "resdet/detection.hpp"
#include "resdet/error.hpp"
#include "resdet/estimation.hpp"

using namespace resdet;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::DomainError;
}

// Independent oracle for the s = 1/2 case: P(1/2, x) = erf(sqrt x).
double p_half(double x) { return std::erf(std::sqrt(x)); }

// 2p-state Euler-discretized bank driven by r with covariance Sigma_r.
Matrix joint_filtered_state_cov(const Matrix& Sr, double tau, double wc) {
  const auto p = Sr.rows();
  const auto bw = butterworth_matrices(wc);
  const Eigen::Matrix2d Phid = Eigen::Matrix2d::Identity() + bw.Phi * tau;
  const Eigen::Vector2d Psid = bw.Psi * tau;
  Matrix Phi = Matrix::Zero(2 * p, 2 * p);
  Matrix Psi = Matrix::Zero(2 * p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    Phi.block(2 * i, 2 * i, 2, 2) = Phid;
    Psi.block(2 * i, i, 2, 1) = Psid;
  }
  return solve_lyapunov_discrete(Phi, Psi * Sr * Psi.transpose());
}

}  // namespace

TEST_CASE("regularized gamma: closed forms") {
  CHECK(reg_lower_gamma(2.5, 0.0) == 0.0);
  CHECK(reg_lower_gamma(1.0, 0.7) == doctest::Approx(1 - std::exp(-0.7)).epsilon(1e-13));
  CHECK(reg_lower_gamma(1.0, 0.7) == doctest::Approx(0.503415).epsilon(1e-6));
  CHECK(reg_lower_gamma(0.5, 1.9207) == doctest::Approx(0.95).epsilon(1e-4));
  for (double x : {0.01, 0.3, 1.0, 1.5, 2.0, 5.0, 12.0, 40.0}) {
    CHECK(std::abs(reg_lower_gamma(0.5, x) - p_half(x)) < 1e-12);
    CHECK(std::abs(reg_lower_gamma(1.0, x) - (1 - std::exp(-x))) < 1e-12);
    // P(2, x) = 1 - (1 + x) e^{-x}
    CHECK(std::abs(reg_lower_gamma(2.0, x) - (1 - (1 + x) * std::exp(-x))) < 1e-12);
  }
  CHECK(code_of([] { reg_lower_gamma(0.0, 1.0); }) == ErrorCode::DomainError);
  CHECK(code_of([] { reg_lower_gamma(1.0, -1.0); }) == ErrorCode::DomainError);
}

TEST_CASE("inverse regularized gamma") {
  CHECK(inv_reg_lower_gamma(0.0, 1.5) == 0.0);
  CHECK(inv_reg_lower_gamma(0.95, 0.5) == doctest::Approx(1.92073).epsilon(1e-5));
  CHECK(inv_reg_lower_gamma(0.95, 1.0) == doctest::Approx(-std::log(0.05)).epsilon(1e-12));
  CHECK(code_of([] { inv_reg_lower_gamma(1.0, 1.0); }) == ErrorCode::DomainError);
}

TEST_CASE("inverse is a right inverse across shapes and levels") {
  for (double s : {0.5, 1.0, 1.5, 2.0, 5.0}) {
    for (int i = 1; i <= 99; ++i) {
      const double y = i / 100.0;
      CHECK(std::abs(reg_lower_gamma(s, inv_reg_lower_gamma(y, s)) - y) < 1e-10);
    }
  }
}

TEST_CASE("threshold tuning") {
  CHECK(tune_threshold(0.05, 1) == doctest::Approx(3.8415).epsilon(2e-5));
  CHECK(tune_threshold(0.05, 2) == doctest::Approx(-2 * std::log(0.05)).epsilon(1e-12));
  CHECK(tune_threshold(1.0, 3) == 0.0);
  CHECK(code_of([] { tune_threshold(0.0, 1); }) == ErrorCode::DomainError);
  CHECK(code_of([] { tune_threshold(0.05, 0); }) == ErrorCode::DomainError);
}

TEST_CASE("threshold is decreasing in rate and increasing in sensors") {
  const double rates[] = {0.001, 0.01, 0.05, 0.1, 0.2, 0.5, 0.9};
  for (int p = 1; p <= 6; ++p) {
    for (std::size_t i = 1; i < std::size(rates); ++i) {
      CHECK(tune_threshold(rates[i], p) < tune_threshold(rates[i - 1], p));
    }
    if (p > 1) {
      for (double r : rates) CHECK(tune_threshold(r, p) > tune_threshold(r, p - 1));
    }
  }
}

TEST_CASE("chi-squared distance and the strict threshold") {
  CHECK(chi2_distance(Vector::Zero(2), Matrix::Identity(2, 2)) == 0.0);
  ChiSquaredDetector det(Matrix::Constant(1, 1, 4.0), 3.84);
  CHECK(det.distance(Vector::Ones(1)) == doctest::Approx(0.25));
  CHECK_FALSE(threshold_test(3.84, 3.84));
  CHECK_FALSE(threshold_test(0.0, 3.84));
  CHECK(threshold_test(std::nextafter(3.84, 4.0), 3.84));
}

TEST_CASE("empirical false-alarm rate matches the tuned rate") {
  std::mt19937_64 rng(123);
  std::normal_distribution<double> n;
  const int N = 1000000;
  for (int p = 1; p <= 3; ++p) {
    Matrix X = Matrix::Random(p, p);
    const Matrix S = X * X.transpose() + Matrix::Identity(p, p);
    const Matrix R = sqrt_psd(S);
    for (double rate : {0.01, 0.05, 0.2}) {
      ChiSquaredDetector det(S, tune_threshold(rate, p));
      long alarms = 0;
      Vector w(p);
      for (int k = 0; k < N; ++k) {
        for (int i = 0; i < p; ++i) w[i] = n(rng);
        if (det.alarm(det.distance(R * w))) ++alarms;
      }
      const double sigma = std::sqrt(rate * (1 - rate) / N);
      CHECK(std::abs(static_cast<double>(alarms) / N - rate) < 3 * sigma);
    }
  }
}

TEST_CASE("butterworth matrices") {
  const auto b12 = butterworth_matrices(12.0);
  CHECK(b12.Phi(0, 0) == 0.0);
  CHECK(b12.Phi(0, 1) == 1.0);
  CHECK(b12.Phi(1, 0) == -144.0);
  CHECK(b12.Phi(1, 1) == doctest::Approx(-16.9706).epsilon(1e-5));
  CHECK(b12.Psi(1) == 144.0);
  const auto b1 = butterworth_matrices(1.0);
  CHECK(b1.Phi(1, 1) == doctest::Approx(-std::numbers::sqrt2));
}

TEST_CASE("filter bank: zero in, zero out; constant settles to DC gain one") {
  ButterworthBank zero(12.0, 0.001, 2);
  for (int k = 0; k < 100; ++k) CHECK(zero.step(Vector::Zero(2)).isZero(0.0));

  ButterworthBank bank(12.0, 0.001, 1);
  const int settle = static_cast<int>(10.0 / (12.0 * 0.001));
  double y = 0;
  for (int k = 0; k < settle; ++k) y = bank.step_scalar(2.5);
  CHECK(std::abs(y - 2.5) < 2.5e-3);
  CHECK_THROWS_AS(ButterworthBank(600.0, 0.001, 1), Error);
}

TEST_CASE("filter gain at the cutoff is -3 dB") {
  const double wc = 12.0, tau = 0.001;
  ButterworthBank bank(wc, tau, 1);
  const int N = 200000;
  double ss = 0.0, sc = 0.0;
  int used = 0;
  for (int k = 0; k < N; ++k) {
    const double t = k * tau;
    const double y = bank.step_scalar(std::sin(wc * t));
    if (t > 20.0) {
      ss += y * std::sin(wc * t);
      sc += y * std::cos(wc * t);
      ++used;
    }
  }
  const double amp = 2.0 * std::hypot(ss, sc) / used;
  CHECK(amp == doctest::Approx(1.0 / std::numbers::sqrt2).epsilon(0.02));
}

TEST_CASE("filtered covariance: closed form and exact scale") {
  const Matrix S1 = Matrix::Constant(1, 1, 1.0);
  CHECK(filtered_covariance_closed_form(S1, 0.001, 12.0)(0, 0) ==
        doctest::Approx(0.012 / (2 * std::numbers::sqrt2)).epsilon(1e-12));
  CHECK(filtered_covariance_closed_form(S1, 0.001, 12.0)(0, 0) ==
        doctest::Approx(0.0042426).epsilon(1e-4));
  const Matrix I2 = Matrix::Identity(2, 2);
  const Matrix S = filtered_covariance_closed_form(I2, 0.001, 12.0);
  CHECK(S(0, 1) == 0.0);
  CHECK(S(0, 0) == S(1, 1));

  CHECK(filtered_scale_exact(0.012) == doctest::Approx(0.0042791).epsilon(1e-4));
  // Small-x limit.
  const double x = 1e-6;
  CHECK(filtered_scale_exact(x) / (x / (2 * std::numbers::sqrt2)) == doctest::Approx(1.0).epsilon(1e-5));
  const double ratio = filtered_scale_exact(0.1) / (0.1 / (2 * std::numbers::sqrt2));
  CHECK(ratio > 1.06);
  CHECK(ratio < 1.09);
}

TEST_CASE("exact scale equals the discrete Lyapunov solution of the filter") {
  for (double x : {0.005, 0.012, 0.05, 0.2}) {
    const double tau = 0.001;
    const double wc = x / tau;
    const Matrix P = joint_filtered_state_cov(Matrix::Constant(1, 1, 1.0), tau, wc);
    CHECK(std::abs(filtered_scale_exact(x) / P(0, 0) - 1.0) < 1e-8);
  }
}

TEST_CASE("joint bank covariance is block structured") {
  Matrix Sr(3, 3);
  Sr << 2.0, 0.4, -0.3, 0.4, 1.0, 0.2, -0.3, 0.2, 1.5;
  const double tau = 0.001, wc = 12.0;
  const Matrix P = joint_filtered_state_cov(Sr, tau, wc);
  const Matrix P1 = joint_filtered_state_cov(Matrix::Constant(1, 1, 1.0), tau, wc);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const Matrix blk = P.block(2 * i, 2 * j, 2, 2);
      CHECK((blk - blk.transpose()).norm() < 1e-9 * P1.norm());
      CHECK((blk - Sr(i, j) * P1).norm() < 1e-9 * P1.norm());
    }
  }
  CHECK((filtered_covariance_exact(Sr, tau, wc) - P1(0, 0) * Sr).norm() < 1e-12);
}

TEST_CASE("filtered distance identity") {
  Matrix Sr(2, 2);
  Sr << 1.3, 0.2, 0.2, 0.7;
  const Matrix Srho = filtered_covariance_closed_form(Sr, 0.001, 12.0);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  CHECK(filtered_distance(Vector::Zero(2), Sr.inverse(), 0.001, 12.0) == 0.0);
  for (int i = 0; i < 50; ++i) {
    Vector rho(2);
    rho << n(rng), n(rng);
    const double a = filtered_distance(rho, Sr.inverse(), 0.001, 12.0);
    const double b = chi2_distance(rho, Srho.inverse());
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("empirical filtered covariance matches the exact scale") {
  const double tau = 0.001, wc = 12.0;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n;
  ButterworthBank bank(wc, tau, 1);
  const int discard = 5000, N = 1000000;
  double acc = 0.0;
  for (int k = 0; k < discard + N; ++k) {
    const double y = bank.step_scalar(n(rng));
    if (k >= discard) acc += y * y;
  }
  const double emp = acc / N;
  const double exact = filtered_scale_exact(tau * wc);
  const double closed = tau * wc / (2 * std::numbers::sqrt2);
  CHECK(std::abs(emp / exact - 1) < 0.05);
  CHECK(std::abs(emp / closed - 1) < 0.05 + std::abs(exact / closed - 1));
}

TEST_CASE("alpha_f calibration") {
  const double tau = 0.01;
  std::vector<double> zero(1000, 0.0);
  CHECK(calibrate_af(zero, 5.0, tau) == 0.0);
  std::vector<double> sine;
  for (int k = 0; k < 20000; ++k) sine.push_back(1.2 * std::sin(k * tau));
  CHECK(calibrate_af(sine, 5.0, tau) == doctest::Approx(1.2).epsilon(0.01));
  CHECK(code_of([&] { calibrate_af(std::vector<double>(10, 1.0), 5.0, tau); }) ==
        ErrorCode::TraceTooShort);
}

TEST_CASE("yf detection boundary and attack prediction") {
  CHECK_FALSE(yf_detect(0.0, 1.55));
  CHECK(yf_detect(-2.0, 1.55));
  CHECK_FALSE(yf_detect(1.55, 1.55));
  CHECK(predict_yf(0.1, 0, 0, 4, 20) == doctest::Approx(0.4));
  CHECK(predict_yf(0, 0, 0, 4, 20) == 0.0);
  for (double t : {0.0, 0.4, 1.3, 2.9}) {
    const double v = predict_yf(0.1 * std::sin(t), 0.1 * std::cos(t), -0.1 * std::sin(t), 4, 20);
    CHECK(v == doctest::Approx(0.3 * std::sin(t) + 2 * std::cos(t)).epsilon(1e-12));
  }
  CHECK(reconstruct_constant_attack(0.4, 4) == doctest::Approx(0.1));
  CHECK(reconstruct_constant_attack(0.0, 4) == 0.0);
  CHECK(code_of([] { reconstruct_constant_attack(0.4, 0.0); }) == ErrorCode::ZeroPlantParameter);
}
