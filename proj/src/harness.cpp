#include "rnsgp/harness.hpp"

#include "rnsgp/csv.hpp"
#include "rnsgp/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace rnsgp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kZ95 = 1.959964;

struct ReplicateOutcome {
  bool ok = false;
  std::string error;
  double rmse = kNaN;
  double uq_rmse = kNaN;
  double nlpd = kNaN;
};

// Mean and sample standard deviation (zero for a single value).
std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) {
    return {kNaN, kNaN};
  }
  double mean = 0.0;
  for (const double x : xs) {
    mean += x;
  }
  mean /= static_cast<double>(xs.size());
  if (xs.size() == 1) {
    return {mean, 0.0};
  }
  double ss = 0.0;
  for (const double x : xs) {
    ss += (x - mean) * (x - mean);
  }
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

void fill_admm(FitOutput& out, const std::vector<AdmmIterate>& history, double initial,
               bool converged, bool monotone) {
  out.history = history;
  out.initial_lagrangian = initial;
  out.iterations = static_cast<int>(history.size());
  out.converged = converged;
  out.lagrangian_monotone = monotone;
  if (!history.empty()) {
    out.primal_residual = history.back().primal_residual;
    out.dual_residual = history.back().dual_residual;
  }
}

FitOutput fit_batch(Method method, const TimeSeriesDataset& data, const MethodSettings& s,
                    bool with_uq) {
  const BatchLatent init = BatchLatent::initial(data);
  const BatchObjective obj(data, s.batch);
  FitOutput out;
  BatchLatent est;
  switch (method) {
    case Method::kNsgp: {
      auto [latent, r] = map_fit(data, s.batch, init, s.map);
      est = std::move(latent);
      out.iterations = r.iterations;
      out.converged = r.converged;
      out.objective = r.value;
      break;
    }
    case Method::kRNsgpGd:
      est = subgradient_fit(data, s.batch, s.batch_reg, init, s.subgradient);
      out.iterations = s.subgradient.max_iters;
      out.objective = regularized_objective(obj, s.batch_reg, est.pack());
      break;
    case Method::kRNsgpAdmm: {
      auto [latent, state] = admm_fit(data, s.batch, s.batch_reg, init, s.admm);
      est = std::move(latent);
      fill_admm(out, state.history, state.initial_lagrangian, state.converged,
                state.lagrangian_monotone);
      out.objective = regularized_objective(obj, s.batch_reg, est.pack());
      break;
    }
    default:
      throw std::logic_error("fit_batch: not a batch method");
  }
  out.f_hat = est.f;
  out.u_ell_hat = est.u_ell;
  out.u_sigma_hat = est.u_sigma;
  if (with_uq) {
    out.marginal = batch_marginal_uq(est, data, s.batch);
  }
  return out;
}

FitOutput fit_state_space(Method method, const TimeSeriesDataset& data, const MethodSettings& s,
                          bool with_uq) {
  const SsLatent init = SsLatent::initial(data);
  const SsObjective obj(data, s.ss, s.scheme);
  FitOutput out;
  SsLatent est;
  switch (method) {
    case Method::kSsNsgp: {
      auto [latent, r] = ss_map_fit(data, s.ss, init, s.map, s.scheme);
      est = std::move(latent);
      out.iterations = r.iterations;
      out.converged = r.converged;
      out.objective = r.value;
      break;
    }
    case Method::kRSsNsgpGd:
      est = ss_subgradient_fit(data, s.ss, s.ss_reg, init, s.subgradient, s.scheme);
      out.iterations = s.subgradient.max_iters;
      out.objective = ss_regularized_objective(obj, s.ss_reg, est.pack());
      break;
    case Method::kRSsNsgpAdmm: {
      auto [latent, state] = ss_admm_fit(data, s.ss, s.ss_reg, init, s.admm, s.scheme);
      est = std::move(latent);
      fill_admm(out, state.history, state.initial_lagrangian, state.converged,
                state.lagrangian_monotone);
      out.objective = ss_regularized_objective(obj, s.ss_reg, est.pack());
      break;
    }
    default:
      throw std::logic_error("fit_state_space: not a state-space method");
  }
  const Eigen::Index n = data.size();
  out.f_hat = est.states.col(0).tail(n);
  out.u_ell_hat = est.states.col(1).tail(n);
  out.u_sigma_hat = est.states.col(2).tail(n);
  if (with_uq) {
    out.marginal = ss_marginal_uq(est, data, s.ss, s.scheme);
  }
  return out;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kGp:
      return "gp";
    case Method::kNsgp:
      return "nsgp";
    case Method::kRNsgpGd:
      return "r-nsgp-gd";
    case Method::kRNsgpAdmm:
      return "r-nsgp-admm";
    case Method::kSsNsgp:
      return "ss-nsgp";
    case Method::kRSsNsgpGd:
      return "r-ss-nsgp-gd";
    case Method::kRSsNsgpAdmm:
      return "r-ss-nsgp-admm";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const Method m : kAllMethods) {
    if (method_name(m) == name) {
      return m;
    }
  }
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

bool is_admm(Method m) { return m == Method::kRNsgpAdmm || m == Method::kRSsNsgpAdmm; }

bool is_state_space(Method m) {
  return m == Method::kSsNsgp || m == Method::kRSsNsgpGd || m == Method::kRSsNsgpAdmm;
}

double rectangular_signal(double t) {
  if (t < 1.0 / 3.0) {
    return 0.0;
  }
  if (t < 2.0 / 3.0) {
    return 1.0;
  }
  return 0.5;
}

SyntheticData make_rectangular_dataset(int steps, double noise_var, std::uint64_t seed,
                                       std::uint64_t stream) {
  if (steps < 3) {
    throw std::invalid_argument("make_rectangular_dataset: T must be >= 3");
  }
  if (!(noise_var > 0.0)) {
    throw std::invalid_argument("make_rectangular_dataset: noise variance must be positive");
  }
  const CounterRng rng(seed, stream);
  const double sd = std::sqrt(noise_var);
  SyntheticData out;
  out.data.times.resize(steps);
  out.data.values.resize(steps);
  out.data.noise_var = Eigen::VectorXd::Constant(steps, noise_var);
  out.truth.resize(steps);
  for (int k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(steps);
    out.data.times[k] = t;
    out.truth[k] = rectangular_signal(t);
    out.data.values[k] = out.truth[k] + sd * rng.normal(static_cast<std::uint64_t>(k));
  }
  return out;
}

MethodSettings MethodSettings::defaults() {
  MethodSettings s;
  s.batch_reg.f = RegBlock{0.0, 150.0, RegMatrix::identity()};
  s.batch_reg.ell = RegBlock{18.0, 150.0, RegMatrix::identity()};
  s.batch_reg.sigma = RegBlock{18.0, 150.0, RegMatrix::identity()};
  s.ss_reg.f.lambda = 0.0;
  s.ss_reg.f.rho = 50.0;
  s.ss_reg.ell.lambda = 8.0;
  s.ss_reg.ell.rho = 50.0;
  s.ss_reg.sigma.lambda = 8.0;
  s.ss_reg.sigma.rho = 50.0;
  return s;
}

FitOutput fit_method(Method method, const TimeSeriesDataset& data, const MethodSettings& settings,
                     bool with_uq) {
  data.validate();
  if (method == Method::kGp) {
    const GpMleResult mle = gp_mle_fit(data, settings.gp_nu);
    PosteriorMarginal post = gp_posterior(data, settings.gp_nu, mle.length_scale, mle.magnitude);
    FitOutput out;
    out.f_hat = post.mean;
    out.u_ell_hat = Eigen::VectorXd::Constant(data.size(), std::log(mle.length_scale));
    out.u_sigma_hat = Eigen::VectorXd::Constant(data.size(), std::log(mle.magnitude));
    out.objective = mle.nlml;
    if (with_uq) {
      out.marginal = std::move(post);
    }
    return out;
  }
  if (is_state_space(method)) {
    return fit_state_space(method, data, settings, with_uq);
  }
  return fit_batch(method, data, settings, with_uq);
}

void ExperimentConfig::validate() const {
  if (methods.empty()) {
    throw std::invalid_argument("methods must not be empty");
  }
  if (runs < 1) {
    throw std::invalid_argument("runs must be >= 1");
  }
  if (steps < 3) {
    throw std::invalid_argument("T must be >= 3");
  }
  if (!(noise_var > 0.0)) {
    throw std::invalid_argument("noise_var must be > 0");
  }
  if (threads < 0) {
    throw std::invalid_argument("threads must be >= 0");
  }
  settings.batch.validate();
  settings.batch_reg.validate(steps);
  settings.ss.validate();
  settings.ss_reg.validate();
  if (settings.subgradient.max_iters < 1 || !(settings.subgradient.step > 0.0)) {
    throw std::invalid_argument("subgradient settings must be positive");
  }
  if (settings.admm.max_outer < 1) {
    throw std::invalid_argument("max_outer must be >= 1");
  }
}

Trace make_trace(Method method, const TimeSeriesDataset& data, const Eigen::VectorXd& truth,
                 const FitOutput& fit) {
  const Eigen::Index n = data.size();
  Trace tr;
  tr.method = method;
  tr.t = data.times;
  tr.y = data.values;
  tr.f_true = truth.size() == n ? truth : Eigen::VectorXd::Constant(n, kNaN);
  tr.f_hat = fit.f_hat;
  tr.u_ell_hat = fit.u_ell_hat;
  tr.u_sigma_hat = fit.u_sigma_hat;
  if (fit.marginal) {
    tr.mean = fit.marginal->mean;
    tr.variance = fit.marginal->variance;
  } else {
    tr.mean = Eigen::VectorXd::Constant(n, kNaN);
    tr.variance = Eigen::VectorXd::Constant(n, kNaN);
  }
  return tr;
}

const MethodSummary& ResultTable::row(Method m) const {
  for (const auto& r : rows) {
    if (r.method == m) {
      return r;
    }
  }
  throw std::out_of_range("ResultTable: method " + std::string(method_name(m)) + " not present");
}

ResultTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  const size_t n_methods = config.methods.size();
  const size_t n_runs = static_cast<size_t>(config.runs);
  const size_t n_jobs = n_methods * n_runs;

  std::vector<ReplicateOutcome> outcomes(n_jobs);
  std::vector<std::optional<Trace>> traces(n_methods);

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t job = next.fetch_add(1); job < n_jobs; job = next.fetch_add(1)) {
      // Replicate-major order keeps one dataset hot across methods.
      const size_t rep = job / n_methods;
      const size_t mi = job % n_methods;
      const Method method = config.methods[mi];
      ReplicateOutcome& o = outcomes[mi * n_runs + rep];
      try {
        const SyntheticData train =
            make_rectangular_dataset(config.steps, config.noise_var, config.seed + rep, 0);
        const FitOutput fit = fit_method(method, train.data, config.settings, config.uq);
        o.rmse = rmse(fit.f_hat, train.truth);
        if (config.uq) {
          o.uq_rmse = rmse(fit.marginal->mean, train.truth);
          if (config.nlpd_target == NlpdTarget::kTraining) {
            o.nlpd = nlpd(*fit.marginal, train.data.values, train.data.noise_var);
          } else {
            const SyntheticData test =
                make_rectangular_dataset(config.steps, config.noise_var, config.seed + rep, 1);
            o.nlpd = nlpd(*fit.marginal, test.data.values, test.data.noise_var);
          }
        }
        if (!std::isfinite(o.rmse)) {
          throw NumericalError("non-finite RMSE");
        }
        o.ok = true;
        if (config.keep_traces && rep == 0) {
          traces[mi] = make_trace(method, train.data, train.truth, fit);
        }
      } catch (const std::exception& e) {
        o.ok = false;
        o.error = e.what();
      }
    }
  };

  size_t n_threads = config.threads > 0 ? static_cast<size_t>(config.threads)
                                        : std::max(1U, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, n_jobs);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (size_t i = 0; i < n_threads; ++i) {
      pool.emplace_back(worker);
    }
  }

  ResultTable table;
  table.seed = config.seed;
  for (size_t mi = 0; mi < n_methods; ++mi) {
    MethodSummary row;
    row.method = config.methods[mi];
    row.runs = config.runs;
    std::vector<double> r;
    std::vector<double> ur;
    std::vector<double> nl;
    std::string first_error;
    for (size_t rep = 0; rep < n_runs; ++rep) {
      const ReplicateOutcome& o = outcomes[mi * n_runs + rep];
      if (!o.ok) {
        ++row.failures;
        if (first_error.empty()) {
          first_error = "replicate " + std::to_string(rep) + " (seed " +
                        std::to_string(config.seed + rep) + "): " + o.error;
        }
        continue;
      }
      r.push_back(o.rmse);
      ur.push_back(o.uq_rmse);
      nl.push_back(o.nlpd);
    }
    if (10 * row.failures > config.runs) {
      throw std::runtime_error("method " + std::string(method_name(row.method)) + ": " +
                               std::to_string(row.failures) + " of " +
                               std::to_string(config.runs) +
                               " replicates failed; first failure: " + first_error);
    }
    std::tie(row.rmse_mean, row.rmse_std) = mean_std(r);
    if (config.uq) {
      std::tie(row.uq_rmse_mean, row.uq_rmse_std) = mean_std(ur);
      std::tie(row.nlpd_mean, row.nlpd_std) = mean_std(nl);
    } else {
      row.uq_rmse_mean = row.uq_rmse_std = row.nlpd_mean = row.nlpd_std = kNaN;
    }
    table.rows.push_back(row);
    if (traces[mi]) {
      table.traces.push_back(std::move(*traces[mi]));
    }
  }
  return table;
}

void write_trace_csv(const Trace& trace, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) {
    throw std::runtime_error("cannot write " + file.string());
  }
  out << "t,y,f_true,f_hat,u_ell_hat,u_sigma_hat,mean,lower95,upper95\n";
  for (Eigen::Index k = 0; k < trace.t.size(); ++k) {
    const double half = kZ95 * std::sqrt(trace.variance[k]);
    out << format_number(trace.t[k]) << ',' << format_number(trace.y[k]) << ','
        << format_number(trace.f_true[k]) << ',' << format_number(trace.f_hat[k]) << ','
        << format_number(trace.u_ell_hat[k]) << ',' << format_number(trace.u_sigma_hat[k]) << ','
        << format_number(trace.mean[k]) << ',' << format_number(trace.mean[k] - half) << ','
        << format_number(trace.mean[k] + half) << '\n';
  }
  if (!out) {
    throw std::runtime_error("failed writing " + file.string());
  }
}

void emit_results(const ResultTable& table, const std::filesystem::path& dir, bool with_traces) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto file = dir / "results.csv";
  std::ofstream out(file);
  if (!out) {
    throw std::runtime_error("cannot write " + file.string());
  }
  out << "method,seed,runs,failures,rmse_mean,rmse_std,uq_rmse_mean,uq_rmse_std,nlpd_mean,"
         "nlpd_std\n";
  for (const auto& r : table.rows) {
    out << method_name(r.method) << ',' << table.seed << ',' << r.runs << ',' << r.failures << ','
        << format_number(r.rmse_mean) << ',' << format_number(r.rmse_std) << ','
        << format_number(r.uq_rmse_mean) << ',' << format_number(r.uq_rmse_std) << ','
        << format_number(r.nlpd_mean) << ',' << format_number(r.nlpd_std) << '\n';
  }
  if (!out) {
    throw std::runtime_error("failed writing " + file.string());
  }
  if (with_traces) {
    for (const auto& tr : table.traces) {
      write_trace_csv(tr, dir / ("trace_" + std::string(method_name(tr.method)) + ".csv"));
    }
  }
}

std::string format_table(const ResultTable& table) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "method" << std::right << std::setw(6) << "runs"
     << std::setw(6) << "fail" << std::setw(12) << "rmse" << std::setw(12) << "rmse_sd"
     << std::setw(12) << "uq_rmse" << std::setw(12) << "uq_rmse_sd" << std::setw(12) << "nlpd"
     << std::setw(12) << "nlpd_sd" << '\n';
  for (const auto& r : table.rows) {
    os << std::left << std::setw(16) << method_name(r.method) << std::right << std::setw(6)
       << r.runs << std::setw(6) << r.failures << std::scientific << std::setprecision(3);
    for (const double v :
         {r.rmse_mean, r.rmse_std, r.uq_rmse_mean, r.uq_rmse_std, r.nlpd_mean, r.nlpd_std}) {
      os << std::setw(12) << v;
    }
    os << std::defaultfloat << '\n';
  }
  return os.str();
}

}  // namespace rnsgp
