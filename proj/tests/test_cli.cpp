#include "rnsgp/cli.hpp"
#include "rnsgp/csv.hpp"
#include "rnsgp/harness.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace rnsgp;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "rnsgp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("rnsgp_cli_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  [[nodiscard]] std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_rows(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) rows.push_back(split_csv_line(line));
  return rows;
}

void write_rectangular_csv(const std::string& path, int steps, bool with_r) {
  const auto ds = make_rectangular_dataset(steps, 0.002, 1);
  std::ofstream out(path);
  out << (with_r ? "t,y,r\n" : "t,y\n");
  for (int k = 0; k < steps; ++k) {
    out << format_number(ds.data.times[k]) << ',' << format_number(ds.data.values[k]);
    if (with_r) out << ",0.002";
    out << '\n';
  }
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors") {
  CHECK(run({}).code == 1);
  CHECK(run({"bogus"}).code == 1);
  CHECK(run({"fit"}).code == 1);
  CHECK(run({"experiment", "--help"}).code == 0);
  CHECK(run({"experiment", "--config", "/nonexistent.json"}).code == 1);
}

TEST_CASE("bundled config produces seven rows") {
  TempDir dir("table1");
  const auto r = run({"experiment", "--config", RNSGP_SOURCE_DIR "/configs/table1.json", "--runs",
                      "1", "--out", dir.file("out")});
  REQUIRE(r.code == 0);
  const auto rows = read_rows(dir.file("out/results.csv"));
  REQUIRE(rows.size() == 8);
  CHECK(rows[0][0] == "method");
  for (size_t i = 0; i < kAllMethods.size(); ++i) {
    CHECK(rows[i + 1][0] == method_name(kAllMethods[i]));
    CHECK(rows[i + 1][2] == "1");
  }
}

TEST_CASE("negative lambda is rejected") {
  TempDir dir("lambda");
  write_file(dir.file("c.json"), R"({"batch": {"lambda_ell": -1}})");
  const auto r = run({"experiment", "--config", dir.file("c.json"), "--out", dir.file("out")});
  CHECK(r.code == 1);
  CHECK(r.err.find("lambda_ell") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir.file("out/results.csv")));
}

TEST_CASE("runs override and traces") {
  TempDir dir("runs");
  write_file(dir.file("c.json"), R"({"methods": ["gp", "r-ss-nsgp-admm"], "runs": 2})");
  const auto r = run({"experiment", "--config", dir.file("c.json"), "--runs", "5", "--traces",
                      "--seed", "3", "--threads", "2", "--out", dir.file("out")});
  REQUIRE(r.code == 0);
  const auto rows = read_rows(dir.file("out/results.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].size() == 10);
  CHECK(rows[1][1] == "3");
  CHECK(rows[1][2] == "5");
  CHECK(rows[2][2] == "5");
  CHECK(std::filesystem::exists(dir.file("out/trace_gp.csv")));
  CHECK(std::filesystem::exists(dir.file("out/trace_r-ss-nsgp-admm.csv")));
  CHECK(run({"experiment", "--runs", "0", "--out", dir.file("x")}).code == 1);
}

TEST_CASE("fit writes a trace per data row") {
  TempDir dir("fit");
  write_rectangular_csv(dir.file("data.csv"), 100, true);
  write_file(dir.file("c.json"), R"({"method": "r-ss-nsgp-admm"})");
  const auto r = run({"fit", "--data", dir.file("data.csv"), "--config", dir.file("c.json"),
                      "--out", dir.file("trace.csv")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("method: r-ss-nsgp-admm") != std::string::npos);
  const auto rows = read_rows(dir.file("trace.csv"));
  REQUIRE(rows.size() == 101);
  CHECK(rows[0].size() == 9);
  for (size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 9);
    CHECK(rows[i][2] == "nan");
    for (size_t c = 0; c < 9; ++c) CHECK_NOTHROW((void)std::stod(rows[i][c]));
  }

  const auto again = run({"fit", "--data", dir.file("data.csv"), "--config", dir.file("c.json"),
                          "--seed", "0", "--out", dir.file("trace2.csv")});
  REQUIRE(again.code == 0);
  CHECK(slurp(dir.file("trace.csv")) == slurp(dir.file("trace2.csv")));
}

TEST_CASE("missing r column uses the configured noise") {
  TempDir dir("noise");
  write_rectangular_csv(dir.file("with_r.csv"), 40, true);
  write_rectangular_csv(dir.file("no_r.csv"), 40, false);
  write_file(dir.file("c.json"), R"({"method": "ss-nsgp", "noise_var": 0.002})");
  REQUIRE(run({"fit", "--data", dir.file("with_r.csv"), "--config", dir.file("c.json"), "--out",
               dir.file("a.csv")}).code == 0);
  REQUIRE(run({"fit", "--data", dir.file("no_r.csv"), "--config", dir.file("c.json"), "--out",
               dir.file("b.csv")}).code == 0);
  CHECK(slurp(dir.file("a.csv")) == slurp(dir.file("b.csv")));
}

TEST_CASE("non-monotone times are rejected") {
  TempDir dir("monotone");
  write_file(dir.file("bad.csv"), "t,y\n0,1\n0.1,2\n0.3,1\n0.2,0\n");
  const auto r = run({"fit", "--data", dir.file("bad.csv"), "--out", dir.file("t.csv")});
  CHECK(r.code == 1);
  CHECK(r.err.find("line 5") != std::string::npos);
  CHECK(r.err.find("not strictly increasing") != std::string::npos);
}

TEST_CASE("diagnose") {
  TempDir dir("diagnose");
  write_rectangular_csv(dir.file("data.csv"), 100, true);

  write_file(dir.file("default.json"), R"({"method": "r-ss-nsgp-admm"})");
  const auto r = run({"diagnose", "--data", dir.file("data.csv"), "--config",
                      dir.file("default.json"), "--out", dir.file("d.csv")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("lagrangian_monotone: true") != std::string::npos);
  const auto rows = read_rows(dir.file("d.csv"));
  CHECK(rows[0] == std::vector<std::string>{"iteration", "lagrangian", "primal_residual", "dual_residual"});
  CHECK(rows.size() >= 2);

  write_file(dir.file("small_rho.json"),
             R"({"method": "r-ss-nsgp-admm", "state_space": {"rho_ell": 0.01, "rho_sigma": 0.01}})");
  const auto s = run({"diagnose", "--data", dir.file("data.csv"), "--config",
                      dir.file("small_rho.json"), "--out", dir.file("s.csv")});
  CHECK(s.code == 0);
  if (s.out.find("lagrangian_monotone: false") != std::string::npos) {
    CHECK(s.err.find("warning") != std::string::npos);
  }

  write_file(dir.file("one.json"), R"({"method": "r-nsgp-admm", "admm": {"max_outer": 1}})");
  const auto o = run({"diagnose", "--data", dir.file("data.csv"), "--config", dir.file("one.json"),
                      "--out", dir.file("o.csv")});
  REQUIRE(o.code == 0);
  CHECK(read_rows(dir.file("o.csv")).size() == 2);

  write_file(dir.file("gd.json"), R"({"method": "r-ss-nsgp-gd"})");
  CHECK(run({"diagnose", "--data", dir.file("data.csv"), "--config", dir.file("gd.json")}).code == 1);
}

}
