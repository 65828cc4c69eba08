#include "rnsgp/cli.hpp"

#include "rnsgp/config.hpp"
#include "rnsgp/csv.hpp"
#include "rnsgp/harness.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <optional>
#include <string>

namespace rnsgp {

namespace {

constexpr int kExitUser = 1;
constexpr int kExitRuntime = 2;

struct Options {
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<int> threads;
  bool traces = false;
};

RunSpec load_spec(const Options& o) {
  RunSpec spec = o.config.empty() ? parse_run_spec("{}") : load_run_spec(o.config);
  if (o.seed) {
    spec.experiment.seed = *o.seed;
  }
  if (o.runs) {
    if (*o.runs < 1) {
      throw ConfigError("runs must be >= 1");
    }
    spec.experiment.runs = *o.runs;
  }
  if (o.threads) {
    if (*o.threads < 0) {
      throw ConfigError("threads must be >= 0");
    }
    spec.experiment.threads = *o.threads;
  }
  if (o.traces) {
    spec.experiment.keep_traces = true;
  }
  return spec;
}

int cmd_experiment(const Options& o, std::ostream& out) {
  const RunSpec spec = load_spec(o);
  const std::string dir = o.out.empty() ? "results" : o.out;
  const ResultTable table = run_experiment(spec.experiment);
  emit_results(table, dir, spec.experiment.keep_traces);
  out << format_table(table);
  out << "wrote " << (std::filesystem::path(dir) / "results.csv").string() << '\n';
  return 0;
}

std::pair<RunSpec, TimeSeriesDataset> load_fit_inputs(const Options& o) {
  RunSpec spec = load_spec(o);
  TimeSeriesDataset data = read_series_csv(o.data, spec.experiment.noise_var);
  return {std::move(spec), std::move(data)};
}

int cmd_fit(const Options& o, std::ostream& out) {
  const auto [spec, data] = load_fit_inputs(o);
  const FitOutput fit = fit_method(spec.method, data, spec.experiment.settings, true);
  const std::string file = o.out.empty() ? "trace.csv" : o.out;
  write_trace_csv(make_trace(spec.method, data, Eigen::VectorXd(), fit), file);
  out << "method: " << method_name(spec.method) << '\n'
      << "objective: " << format_number(fit.objective) << '\n'
      << "iterations: " << fit.iterations << '\n'
      << "primal_residual: " << format_number(fit.primal_residual) << '\n'
      << "dual_residual: " << format_number(fit.dual_residual) << '\n'
      << "converged: " << (fit.converged ? "true" : "false") << '\n'
      << "wrote " << file << '\n';
  return 0;
}

int cmd_diagnose(const Options& o, std::ostream& out, std::ostream& err) {
  const auto [spec, data] = load_fit_inputs(o);
  if (!is_admm(spec.method)) {
    throw ConfigError("method: diagnose requires an ADMM method, got '" +
                      std::string(method_name(spec.method)) + "'");
  }
  const FitOutput fit = fit_method(spec.method, data, spec.experiment.settings, false);
  const std::string file = o.out.empty() ? "diagnostics.csv" : o.out;
  std::ofstream csv(file);
  if (!csv) {
    throw std::runtime_error("cannot write " + file);
  }
  csv << "iteration,lagrangian,primal_residual,dual_residual\n";
  for (size_t i = 0; i < fit.history.size(); ++i) {
    const AdmmIterate& h = fit.history[i];
    csv << i + 1 << ',' << format_number(h.lagrangian) << ',' << format_number(h.primal_residual)
        << ',' << format_number(h.dual_residual) << '\n';
  }
  if (!csv) {
    throw std::runtime_error("failed writing " + file);
  }
  out << "method: " << method_name(spec.method) << '\n'
      << "initial_lagrangian: " << format_number(fit.initial_lagrangian) << '\n'
      << "iterations: " << fit.iterations << '\n'
      << "converged: " << (fit.converged ? "true" : "false") << '\n'
      << "lagrangian_monotone: " << (fit.lagrangian_monotone ? "true" : "false") << '\n'
      << "wrote " << file << '\n';
  if (!fit.lagrangian_monotone) {
    err << "warning: augmented Lagrangian increased during the run; consider a larger rho\n";
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"L1-regularized non-stationary GP regression"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON run spec")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Base random seed");
    sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  };

  CLI::App* exp = app.add_subcommand("experiment", "Monte-Carlo benchmark on synthetic data");
  add_common(exp);
  exp->add_option("--out", o.out, "Output directory");
  exp->add_option("--runs", o.runs, "Number of Monte-Carlo replicates");
  exp->add_flag("--traces", o.traces, "Write trace_<method>.csv for replicate 0");

  CLI::App* fit = app.add_subcommand("fit", "Fit one method to a CSV series");
  add_common(fit);
  fit->add_option("--data", o.data, "CSV with columns t,y[,r]")->required();
  fit->add_option("--out", o.out, "Trace CSV path");

  CLI::App* diag = app.add_subcommand("diagnose", "Write ADMM iteration diagnostics");
  add_common(diag);
  diag->add_option("--data", o.data, "CSV with columns t,y[,r]")->required();
  diag->add_option("--out", o.out, "Diagnostics CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitUser;
  }

  try {
    if (exp->parsed()) {
      return cmd_experiment(o, out);
    }
    if (fit->parsed()) {
      return cmd_fit(o, out);
    }
    return cmd_diagnose(o, out, err);
  } catch (const ConfigError& e) {
    err << "error: invalid config: " << e.what() << '\n';
    return kExitUser;
  } catch (const CsvError& e) {
    err << "error: invalid data: " << e.what() << '\n';
    return kExitUser;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUser;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace rnsgp
