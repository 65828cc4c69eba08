#include "rnsgp/config.hpp"
#include "rnsgp/csv.hpp"
#include "rnsgp/rng.hpp"

#include "doctest.h"

#include <cmath>
#include <sstream>

using namespace rnsgp;

TEST_SUITE("rng") {

TEST_CASE("splitmix64 reference outputs") {
  CHECK(splitmix64(0) == 16294208416658607535ULL);
  CHECK(splitmix64(1234567) == 6457827717110365317ULL);
  CHECK(CounterRng(0, 0).bits(0) == 2558736989570252433ULL);
  CHECK(CounterRng(42, 1).bits(7) == 1952419378684700410ULL);
  CHECK(CounterRng(42, 1).uniform(7) == 0.1058408665986375);
}

TEST_CASE("draws are pure functions of the counter") {
  const CounterRng a(3, 0);
  const CounterRng b(3, 0);
  CHECK(a.normal(10) == b.normal(10));
  CHECK(a.normal(10) != CounterRng(3, 1).normal(10));
  CHECK(a.normal(10) != CounterRng(4, 0).normal(10));
  CHECK(a.seed() == 3);
}

TEST_CASE("moments") {
  const CounterRng r(5, 0);
  const int n = 200000;
  double s = 0.0, s2 = 0.0, umin = 1.0, umax = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal(static_cast<std::uint64_t>(i));
    s += z;
    s2 += z * z;
    const double u = r.uniform(static_cast<std::uint64_t>(i));
    umin = std::min(umin, u);
    umax = std::max(umax, u);
  }
  CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(umin > 0.0);
  CHECK(umax < 1.0);
}

}

TEST_SUITE("csv") {

TEST_CASE("reads t, y and r") {
  std::istringstream in("t,y,r\n0,1.5,0.1\n0.5, 2 ,0.2\n1,3,0.3\n");
  const auto d = read_series_csv(in, 0.002);
  CHECK(d.size() == 3);
  CHECK(d.values[1] == 2.0);
  CHECK(d.noise_var[2] == 0.3);
}

TEST_CASE("column order and default noise") {
  std::istringstream in("y,t\n1,0\n2,1\n");
  const auto d = read_series_csv(in, 0.002);
  CHECK(d.times[1] == 1.0);
  CHECK(d.values[1] == 2.0);
  CHECK(d.noise_var == Eigen::Vector2d(0.002, 0.002));
}

TEST_CASE("errors name the offending line") {
  std::istringstream bad_t("t,y\n0,1\n0.5,2\n0.4,3\n");
  try {
    (void)read_series_csv(bad_t, 0.002);
    FAIL("expected an error");
  } catch (const CsvError& e) {
    CHECK(e.line() == 4);
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    CHECK(std::string(e.what()).find("not strictly increasing") != std::string::npos);
  }
  std::istringstream bad_num("t,y\n0,abc\n");
  CHECK_THROWS_AS((void)read_series_csv(bad_num, 0.002), CsvError);
  std::istringstream nan_num("t,y\n0,nan\n");
  CHECK_THROWS_AS((void)read_series_csv(nan_num, 0.002), CsvError);
  std::istringstream cols("t,y\n0,1,2\n");
  CHECK_THROWS_AS((void)read_series_csv(cols, 0.002), CsvError);
  std::istringstream header("a,b\n0,1\n");
  CHECK_THROWS_AS((void)read_series_csv(header, 0.002), CsvError);
  std::istringstream empty("");
  CHECK_THROWS_AS((void)read_series_csv(empty, 0.002), CsvError);
  std::istringstream neg_r("t,y,r\n0,1,-1\n");
  CHECK_THROWS_AS((void)read_series_csv(neg_r, 0.002), CsvError);
  CHECK_THROWS_AS((void)read_series_csv(std::filesystem::path("/nonexistent/x.csv"), 0.002), CsvError);
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 123456789.123456789}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(INFINITY) == "inf");
  CHECK(format_number(-INFINITY) == "-inf");
  CHECK(split_csv_line(" a , b,c ") == std::vector<std::string>{"a", "b", "c"});
}

}

TEST_SUITE("config") {

TEST_CASE("empty document keeps the defaults") {
  const auto spec = parse_run_spec("{}");
  const auto d = MethodSettings::defaults();
  CHECK(spec.method == Method::kRSsNsgpAdmm);
  CHECK(spec.experiment.runs == 100);
  CHECK(spec.experiment.steps == 100);
  CHECK(spec.experiment.noise_var == 0.002);
  CHECK(spec.experiment.methods.size() == 7);
  CHECK(spec.experiment.settings.batch_reg.ell.lambda == d.batch_reg.ell.lambda);
  CHECK(spec.experiment.settings.batch_reg.ell.lambda == 18.0);
  CHECK(spec.experiment.settings.batch_reg.sigma.rho == 150.0);
  CHECK(spec.experiment.settings.batch_reg.f.lambda == 0.0);
  CHECK(spec.experiment.settings.ss_reg.ell.lambda == 8.0);
  CHECK(spec.experiment.settings.ss_reg.sigma.rho == 50.0);
  CHECK(spec.experiment.settings.batch.ell_link.baseline == 2.0);
  CHECK(spec.experiment.settings.batch.sigma_link.baseline == -1.0);
  CHECK(spec.experiment.settings.batch.u_length_scale == 0.01);
  CHECK(spec.experiment.settings.batch.u_magnitude == 3.0);
}

TEST_CASE("bundled table1 config matches the defaults") {
  const auto spec = load_run_spec(RNSGP_SOURCE_DIR "/configs/table1.json");
  const auto& s = spec.experiment.settings;
  const auto d = MethodSettings::defaults();
  CHECK(spec.experiment.methods.size() == 7);
  CHECK(s.batch_reg.ell.lambda == d.batch_reg.ell.lambda);
  CHECK(s.ss_reg.ell.rho == d.ss_reg.ell.rho);
  CHECK(s.ss.u_length_scale == d.ss.u_length_scale);
  CHECK_FALSE(s.ss.p0.has_value());
  CHECK(s.admm.tol_primal < 0.0);
  CHECK(s.subgradient.max_iters == d.subgradient.max_iters);
}

TEST_CASE("overrides") {
  const auto spec = parse_run_spec(R"({
    "method": "r-nsgp-admm", "runs": 5, "seed": 17, "T": 50,
    "batch": {"lambda_ell": 3, "phi_f": "first_difference", "ell_link": {"kind": "logistic", "floor": 0.1}},
    "state_space": {"scheme": "euler-maruyama", "p0": [[1,0,0],[0,2,0],[0,0,3]]},
    "admm": {"max_outer": 7, "tol_primal": 0.01},
    "nlpd_target": "held_out"
  })");
  CHECK(spec.method == Method::kRNsgpAdmm);
  CHECK(spec.experiment.runs == 5);
  CHECK(spec.experiment.seed == 17);
  CHECK(spec.experiment.steps == 50);
  const auto& s = spec.experiment.settings;
  CHECK(s.batch_reg.ell.lambda == 3.0);
  CHECK(s.batch_reg.f.phi.kind() == RegMatrixKind::kFirstDifference);
  CHECK(s.batch.ell_link.kind == LinkKind::kLogistic);
  CHECK(s.batch.ell_link.floor == 0.1);
  CHECK(s.scheme == DiscretizationScheme::kEulerMaruyama);
  CHECK((*s.ss.p0)(2, 2) == 3.0);
  CHECK(s.admm.max_outer == 7);
  CHECK(s.admm.tol_primal == 0.01);
  CHECK(spec.experiment.nlpd_target == NlpdTarget::kHeldOut);
}

TEST_CASE("invalid documents name the key") {
  CHECK_THROWS_WITH_AS((void)parse_run_spec(R"({"batch": {"lambda_ell": -1}})"),
                       "batch.lambda_ell must be >= 0", ConfigError);
  CHECK_THROWS_WITH_AS((void)parse_run_spec(R"({"state_space": {"rho_sigma": 0}})"),
                       "state_space.rho_sigma must be > 0", ConfigError);
  CHECK_THROWS_WITH_AS((void)parse_run_spec(R"({"bogus": 1})"), "unknown key 'bogus'", ConfigError);
  CHECK_THROWS_WITH_AS((void)parse_run_spec(R"({"batch": {"lamda_ell": 1}})"),
                       "unknown key 'batch.lamda_ell'", ConfigError);
  CHECK_THROWS_AS((void)parse_run_spec("{"), ConfigError);
  CHECK_THROWS_AS((void)parse_run_spec(R"({"method": "svm"})"), ConfigError);
  CHECK_THROWS_AS((void)parse_run_spec(R"({"runs": 0})"), ConfigError);
  CHECK_THROWS_AS((void)parse_run_spec(R"({"seed": -3})"), ConfigError);
  CHECK_THROWS_AS((void)parse_run_spec(R"({"batch": {"nu": 2.5}})"), ConfigError);
  CHECK_THROWS_AS((void)parse_run_spec(R"({"state_space": {"p0": [[1,0],[0,1]]}})"), ConfigError);
  CHECK_THROWS_AS((void)parse_run_spec(R"({"state_space": {"p0": [[1,0,0],[0,-1,0],[0,0,1]]}})"),
                  ConfigError);
  CHECK_THROWS_AS((void)load_run_spec("/nonexistent/config.json"), ConfigError);
}

}
