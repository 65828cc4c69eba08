#include "rnsgp/kernels.hpp"
#include "rnsgp/statespace_model.hpp"

#include "doctest.h"
#include "test_util.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace rnsgp;

namespace {

SsNsgpModel unit_model() {
  SsNsgpModel m;
  m.ell_link = {LinkKind::kExp, 0.0, 0.0};
  m.sigma_link = {LinkKind::kExp, 0.0, 0.0};
  m.u_length_scale = 1.0;
  m.u_magnitude = 1.0;
  return m;
}

}  // namespace

TEST_SUITE("statespace_model") {

TEST_CASE("drift and diffusion") {
  const auto m = unit_model();
  const auto dd = sde_drift_diffusion(Eigen::Vector3d::Zero(), m);
  CHECK(dd.drift == Eigen::Vector3d::Zero());
  for (int i = 0; i < 3; ++i) CHECK(dd.diffusion[i] == doctest::Approx(std::numbers::sqrt2));
  const auto d2 = sde_drift_diffusion(Eigen::Vector3d(1.0, std::log(2.0), 0.0), m);
  CHECK(d2.drift[0] == doctest::Approx(-0.5));
}

TEST_CASE("u-block stationary variance") {
  std::mt19937_64 gen(51);
  std::uniform_real_distribution<double> pos(0.01, 5.0);
  for (int i = 0; i < 50; ++i) {
    SsNsgpModel m;
    m.u_length_scale = pos(gen);
    m.u_magnitude = pos(gen);
    const auto dd = sde_drift_diffusion(testing::normal_vector(gen, 3), m);
    // Stationary OU variance b^2 / (2 * rate).
    const double var = dd.diffusion[1] * dd.diffusion[1] * m.u_length_scale / 2.0;
    CHECK(var == doctest::Approx(m.u_magnitude * m.u_magnitude).epsilon(1e-12));
  }
}

TEST_CASE("exact OU limits") {
  const auto m = unit_model();
  const auto far = discretize(Eigen::Vector3d(1.0, 1.0, 1.0), 1e3, m, DiscretizationScheme::kExactOu);
  CHECK(far.mean[1] == doctest::Approx(0.0));
  CHECK(far.cov[1] == doctest::Approx(1.0));
  CHECK(far.cov[2] == doctest::Approx(1.0));
  CHECK(far.dt == 1e3);

  std::mt19937_64 gen(52);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector3d z = testing::normal_vector(gen, 3);
    const auto ex = discretize(z, 1e-8, m, DiscretizationScheme::kExactOu);
    const auto em = discretize(z, 1e-8, m, DiscretizationScheme::kEulerMaruyama);
    for (int c = 0; c < 3; ++c) {
      CHECK(std::abs(ex.mean[c] - em.mean[c]) <= 1e-6 * std::abs(em.mean[c]));
      CHECK(std::abs(ex.cov[c] - em.cov[c]) <= 1e-6 * em.cov[c]);
    }
    const auto dd = sde_drift_diffusion(z, m);
    CHECK(em.cov[0] == doctest::Approx(dd.diffusion[0] * dd.diffusion[0] * 1e-8));
  }
}

TEST_CASE("euler-maruyama unit step") {
  const auto t = discretize(Eigen::Vector3d::Zero(), 0.01, unit_model(),
                            DiscretizationScheme::kEulerMaruyama);
  CHECK(t.mean == Eigen::Vector3d::Zero());
  for (int c = 0; c < 3; ++c) CHECK(t.cov[c] == doctest::Approx(0.02));
  CHECK(t.covariance()(0, 1) == 0.0);
}

TEST_CASE("exact OU covariance is positive") {
  std::mt19937_64 gen(53);
  const SsNsgpModel m;
  std::uniform_real_distribution<double> logdt(-8.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const auto t = discretize(testing::normal_vector(gen, 3, 3.0), std::pow(10.0, logdt(gen)), m,
                              DiscretizationScheme::kExactOu);
    CHECK((t.cov.array() > 0.0).all());
    CHECK(t.cov.allFinite());
  }
  CHECK_THROWS_AS((void)discretize(Eigen::Vector3d::Zero(), 0.0, m, DiscretizationScheme::kExactOu),
                  std::invalid_argument);
}

TEST_CASE("transition jet derivatives") {
  std::mt19937_64 gen(54);
  SsNsgpModel m;
  m.ell_link = {LinkKind::kLogistic, 0.0, 0.05};
  const double h = 1e-6;
  for (auto scheme : {DiscretizationScheme::kExactOu, DiscretizationScheme::kEulerMaruyama}) {
    for (int i = 0; i < 20; ++i) {
      const double ue = std::normal_distribution<double>(0.0, 1.0)(gen);
      const double us = std::normal_distribution<double>(0.0, 1.0)(gen);
      const double dt = 0.01;
      const auto j = transition_jet(ue, us, dt, m, scheme);
      const auto pe = transition_jet(ue + h, us, dt, m, scheme);
      const auto me = transition_jet(ue - h, us, dt, m, scheme);
      const auto ps = transition_jet(ue, us + h, dt, m, scheme);
      const auto ms = transition_jet(ue, us - h, dt, m, scheme);
      CHECK(j.df_factor_du_ell == doctest::Approx((pe.f_factor - me.f_factor) / (2 * h)).epsilon(1e-6));
      CHECK(j.dq_f_du_ell == doctest::Approx((pe.q_f - me.q_f) / (2 * h)).epsilon(1e-6));
      CHECK(j.dq_f_du_sigma == doctest::Approx((ps.q_f - ms.q_f) / (2 * h)).epsilon(1e-6));
    }
  }
}

TEST_CASE("default initial covariance") {
  SsNsgpModel m;
  const Eigen::Matrix3d p = m.initial_covariance();
  CHECK(p(0, 0) == doctest::Approx(std::exp(-2.0)));
  CHECK(p(1, 1) == 9.0);
  CHECK(p(2, 2) == 9.0);
  CHECK(p(0, 1) == 0.0);
  m.p0 = Eigen::Matrix3d::Identity();
  CHECK(m.initial_covariance() == Eigen::Matrix3d::Identity());
  m.p0 = -Eigen::Matrix3d::Identity();
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("step sizes") {
  const auto dt = step_sizes(Eigen::Vector3d(0.1, 0.3, 0.6));
  CHECK(dt[0] == doctest::Approx(0.2));
  CHECK(dt[1] == doctest::Approx(0.2));
  CHECK(dt[2] == doctest::Approx(0.3));
  CHECK(step_sizes(Eigen::VectorXd::Constant(1, 5.0))[0] == 1.0);
}

TEST_CASE("implied covariance on constant paths") {
  for (double ell_bar : {0.05, 0.3, 1.7}) {
    for (double sigma_bar : {0.4, 2.0}) {
      SsNsgpModel m;
      m.ell_link = {LinkKind::kExp, std::log(ell_bar), 0.0};
      m.sigma_link = {LinkKind::kExp, std::log(sigma_bar), 0.0};
      const auto zero = [](double) { return 0.0; };
      const double t = 1.0;
      for (double tp : {1.0, 0.9, 1.0 + ell_bar}) {
        const double t0 = std::min(t, tp) - 50.0 * ell_bar;
        const double v = implied_covariance(zero, zero, t, tp, t0, sigma_bar * sigma_bar, m, 4001);
        const double ou = sigma_bar * sigma_bar * std::exp(-std::abs(t - tp) / ell_bar);
        CHECK(std::abs(v - ou) <= 1e-6 * ou);
        const double k = stationary_matern(t - tp, {Smoothness::kHalf,
                                                    paciorek_length_from_ou(ell_bar), sigma_bar});
        CHECK(std::abs(v - k) <= 1e-8 * std::max(k, 1e-300) + 1e-6 * ou);
        CHECK(std::abs(ou - k) <= 1e-8 * ou);
      }
    }
  }
}

TEST_CASE("implied covariance at the initial time") {
  const SsNsgpModel m;
  const auto zero = [](double) { return 0.0; };
  CHECK(implied_covariance(zero, zero, 0.3, 0.3, 0.3, 1.234, m) == 1.234);
  CHECK_THROWS_AS((void)implied_covariance(zero, zero, 0.1, 0.3, 0.2, 1.0, m), std::invalid_argument);
}

TEST_CASE("implied covariance symmetry") {
  SsNsgpModel m;
  m.ell_link = {LinkKind::kExp, std::log(0.3), 0.0};
  const auto ue = [](double s) { return 0.8 * std::sin(5.0 * s); };
  const auto us = [](double s) { return 0.5 * std::cos(3.0 * s); };
  std::mt19937_64 gen(55);
  std::uniform_real_distribution<double> time(0.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    const double a = time(gen), b = time(gen);
    const double x = implied_covariance(ue, us, a, b, 0.0, 0.2, m);
    const double y = implied_covariance(ue, us, b, a, 0.0, 0.2, m);
    CHECK(std::abs(x - y) <= 1e-12 * std::abs(x));
  }
}

}
