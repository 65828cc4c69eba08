#include "rnsgp/dataset.hpp"
#include "rnsgp/kernels.hpp"

#include "doctest.h"
#include "test_util.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace rnsgp;

TEST_SUITE("kernels") {

TEST_CASE("stationary matern examples") {
  CHECK(stationary_matern(0.0, {Smoothness::kHalf, 0.3, 2.0}) == 4.0);
  CHECK(stationary_matern(0.0, {Smoothness::kThreeHalves, 0.3, 2.0}) == doctest::Approx(4.0));
  CHECK(stationary_matern(1.0, {Smoothness::kHalf, 1.0, 1.0}) ==
        doctest::Approx(0.2431167344342142108).epsilon(1e-15));
  double prev = 1.0;
  for (double tau = 0.1; tau < 40.0; tau *= 1.5) {
    for (auto nu : {Smoothness::kHalf, Smoothness::kThreeHalves}) {
      const double v = stationary_matern(tau, {nu, 1.0, 1.0});
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
    const double v = stationary_matern(tau, {Smoothness::kHalf, 1.0, 1.0});
    CHECK(v < prev);
    prev = v;
  }
  CHECK(stationary_matern(1e3, {Smoothness::kHalf, 1.0, 1.0}) < 1e-300);
  CHECK_THROWS_AS((MaternParams{Smoothness::kHalf, 0.0, 1.0}.validate()), std::domain_error);
}

TEST_CASE("paciorek high-precision values") {
  CHECK(paciorek_nonstationary(1.0, 0.0, 1.0, 4.0, 1.0, 1.0, Smoothness::kHalf) ==
        doctest::Approx(0.3656791510023246549).epsilon(1e-14));
  CHECK(paciorek_nonstationary(1.0, 0.0, 1.0, 4.0, 1.0, 1.0, Smoothness::kThreeHalves) ==
        doctest::Approx(0.4843303116912424216).epsilon(1e-14));
  CHECK(paciorek_nonstationary(0.3, 0.0, 0.2, 0.7, 1.5, 0.8, Smoothness::kHalf) ==
        doctest::Approx(0.5813464843799150294).epsilon(1e-14));
  CHECK(paciorek_nonstationary(0.3, 0.0, 0.2, 0.7, 1.5, 0.8, Smoothness::kThreeHalves) ==
        doctest::Approx(0.7667212842108524254).epsilon(1e-14));
}

TEST_CASE("paciorek diagonal and errors") {
  CHECK(paciorek_nonstationary(0.5, 0.5, 0.3, 0.3, 2.0, 2.0, Smoothness::kHalf) == 4.0);
  CHECK(paciorek_nonstationary(0.5, 0.5, 0.3, 0.3, 2.0, 2.0, Smoothness::kThreeHalves) == 4.0);
  CHECK_THROWS_AS((void)paciorek_nonstationary(0, 1, -1, 1, 1, 1, Smoothness::kHalf), std::domain_error);
  CHECK_THROWS_AS((void)paciorek_nonstationary(0, 1, 1, 1, 0, 1, Smoothness::kHalf), std::domain_error);
}

TEST_CASE("stationary reduction") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> pos(0.01, 10.0);
  std::uniform_real_distribution<double> time(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const double ell = pos(gen);
    const double sigma = pos(gen);
    const double t = time(gen);
    const double tp = time(gen);
    for (auto nu : {Smoothness::kHalf, Smoothness::kThreeHalves}) {
      const double a = paciorek_nonstationary(t, tp, ell, ell, sigma, sigma, nu);
      const double b = stationary_matern(t - tp, {nu, ell, sigma});
      CHECK(std::abs(a - b) <= 1e-12 * std::abs(b) + 1e-300);
    }
  }
}

TEST_CASE("argument symmetry") {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> pos(0.1, 10.0);
  for (int i = 0; i < 200; ++i) {
    const double a = pos(gen), b = pos(gen), c = pos(gen), d = pos(gen);
    const double t = pos(gen), tp = pos(gen);
    for (auto nu : {Smoothness::kHalf, Smoothness::kThreeHalves}) {
      CHECK(paciorek_nonstationary(t, tp, a, b, c, d, nu) ==
            paciorek_nonstationary(tp, t, b, a, d, c, nu));
    }
  }
}

TEST_CASE("paciorek jet log-derivatives") {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> pos(0.05, 3.0);
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const double tau = pos(gen) - 1.5, l1 = pos(gen), l2 = pos(gen), s1 = pos(gen), s2 = pos(gen);
    for (auto nu : {Smoothness::kHalf, Smoothness::kThreeHalves}) {
      const auto jet = paciorek_jet(tau, l1, l2, s1, s2, nu);
      CHECK(jet.value == doctest::Approx(paciorek_nonstationary(tau, 0.0, l1, l2, s1, s2, nu)));
      const double fd1 = (std::log(paciorek_jet(tau, l1 + h, l2, s1, s2, nu).value) -
                          std::log(paciorek_jet(tau, l1 - h, l2, s1, s2, nu).value)) / (2 * h);
      const double fd2 = (std::log(paciorek_jet(tau, l1, l2 + h, s1, s2, nu).value) -
                          std::log(paciorek_jet(tau, l1, l2 - h, s1, s2, nu).value)) / (2 * h);
      CHECK(jet.dlog_dell_t == doctest::Approx(fd1).epsilon(1e-6));
      CHECK(jet.dlog_dell_tp == doctest::Approx(fd2).epsilon(1e-6));
    }
  }
}

TEST_CASE("build_cov_matrix examples") {
  const std::vector<double> one{0.0};
  const auto m1 = build_cov_matrix(one, [](double, double) { return 4.0; }, 0.0);
  CHECK(m1.entries.rows() == 1);
  CHECK(m1.entries(0, 0) == 4.0);

  const std::vector<double> two{0.0, 1.0};
  const MaternParams p{Smoothness::kHalf, 1.0, 1.0};
  const auto m2 = build_cov_matrix(
      two, [&](double a, double b) { return stationary_matern(a - b, p); }, 0.0);
  CHECK(m2.entries(0, 0) == 1.0);
  CHECK(m2.entries(1, 1) == 1.0);
  CHECK(m2.entries(0, 1) == doctest::Approx(std::exp(-std::sqrt(2.0))));
  CHECK(m2.entries(1, 0) == m2.entries(0, 1));

  const std::vector<double> three{0.0, 0.4, 1.1};
  const auto m3 = build_cov_matrix(
      three,
      [](double a, double b) {
        return paciorek_nonstationary(a, b, 0.2 + a, 0.2 + b, 1.0 + a, 1.0 + b, Smoothness::kHalf);
      },
      1e-9);
  CHECK((m3.entries - m3.entries.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(m3.jitter_applied == 1e-9);
}

TEST_CASE("build_cov_matrix errors") {
  const std::vector<double> bad{0.0, 0.0};
  CHECK_THROWS_AS((void)build_cov_matrix(bad, [](double, double) { return 1.0; }, 0.0),
                  std::invalid_argument);
  const std::vector<double> ok{0.0, 1.0};
  CHECK_THROWS_AS((void)build_cov_matrix(ok, [](double, double) { return 1.0; }, -1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)build_cov_matrix(ok, [](double, double) { return 1.0; }, 0.0),
                  NumericalError);
}

TEST_CASE("positive definite on random smooth parameter paths") {
  std::mt19937_64 gen(14);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(unit(gen) * 62);
    auto times = testing::uniform_vector(gen, n, 0.0, 1.0);
    std::sort(times.begin(), times.end());
    const double a = unit(gen) * 6.0, b = unit(gen) * 6.0, c = unit(gen) * 6.0;
    auto ell = [&](double t) { return std::exp(std::log(0.1) + a * (0.5 + 0.5 * std::sin(3 * t + b)) * std::log(100.0) / 6.0); };
    auto sig = [&](double t) { return std::exp(std::log(0.1) + c * (0.5 + 0.5 * std::cos(2 * t)) * std::log(100.0) / 6.0); };
    auto kernel = [&](double s, double t) {
      return paciorek_nonstationary(s, t, ell(s), ell(t), sig(s), sig(t), Smoothness::kHalf);
    };
    Eigen::MatrixXd k(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) k(i, j) = kernel(times[i], times[j]);
    const std::vector<double> tv(times.begin(), times.end());
    CHECK_NOTHROW((void)build_cov_matrix(tv, kernel, default_jitter(k)));
  }
}

TEST_CASE("ou length conversion") {
  CHECK(paciorek_length_from_ou(0.5) == 0.5);
  const double ell_ou = 0.37;
  for (double tau : {0.0, 0.1, 0.5, 2.0}) {
    const double ou = std::exp(-tau / ell_ou);
    CHECK(stationary_matern(tau, {Smoothness::kHalf, paciorek_length_from_ou(ell_ou), 1.0}) ==
          doctest::Approx(ou).epsilon(1e-8));
  }
}

}
