#include "rnsgp/config.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace rnsgp {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) {
    throw ConfigError((where.empty() ? std::string("document") : where) + " must be an object");
  }
  for (const auto& [key, value] : obj.items()) {
    if (allowed.count(key) == 0) {
      throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

std::string path_of(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

double get_number(const json& obj, const std::string& where, const std::string& key,
                  double fallback) {
  if (!obj.contains(key)) {
    return fallback;
  }
  const json& v = obj.at(key);
  if (!v.is_number()) {
    throw ConfigError(path_of(where, key) + " must be a number");
  }
  return v.get<double>();
}

double get_nonneg(const json& obj, const std::string& where, const std::string& key,
                  double fallback) {
  const double v = get_number(obj, where, key, fallback);
  if (!(v >= 0.0)) {
    throw ConfigError(path_of(where, key) + " must be >= 0");
  }
  return v;
}

double get_positive(const json& obj, const std::string& where, const std::string& key,
                    double fallback) {
  const double v = get_number(obj, where, key, fallback);
  if (!(v > 0.0)) {
    throw ConfigError(path_of(where, key) + " must be > 0");
  }
  return v;
}

int get_int(const json& obj, const std::string& where, const std::string& key, int fallback,
            int min_value) {
  if (!obj.contains(key)) {
    return fallback;
  }
  const json& v = obj.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError(path_of(where, key) + " must be an integer");
  }
  const auto i = v.get<long long>();
  if (i < min_value || i > 1'000'000'000LL) {
    throw ConfigError(path_of(where, key) + " must be >= " + std::to_string(min_value));
  }
  return static_cast<int>(i);
}

bool get_bool(const json& obj, const std::string& where, const std::string& key, bool fallback) {
  if (!obj.contains(key)) {
    return fallback;
  }
  if (!obj.at(key).is_boolean()) {
    throw ConfigError(path_of(where, key) + " must be true or false");
  }
  return obj.at(key).get<bool>();
}

std::string get_string(const json& obj, const std::string& where, const std::string& key,
                       const std::string& fallback) {
  if (!obj.contains(key)) {
    return fallback;
  }
  if (!obj.at(key).is_string()) {
    throw ConfigError(path_of(where, key) + " must be a string");
  }
  return obj.at(key).get<std::string>();
}

Smoothness get_nu(const json& obj, const std::string& where, const std::string& key,
                  Smoothness fallback) {
  if (!obj.contains(key)) {
    return fallback;
  }
  const double v = get_number(obj, where, key, 0.0);
  if (v == 0.5) {
    return Smoothness::kHalf;
  }
  if (v == 1.5) {
    return Smoothness::kThreeHalves;
  }
  throw ConfigError(path_of(where, key) + " must be 0.5 or 1.5");
}

LinkTransform parse_link(const json& obj, const std::string& where, LinkTransform link) {
  check_keys(obj, where, {"kind", "baseline", "floor"});
  const std::string kind =
      get_string(obj, where, "kind", link.kind == LinkKind::kExp ? "exp" : "logistic");
  if (kind == "exp") {
    link.kind = LinkKind::kExp;
  } else if (kind == "logistic") {
    link.kind = LinkKind::kLogistic;
  } else {
    throw ConfigError(where + ".kind must be \"exp\" or \"logistic\"");
  }
  link.baseline = get_number(obj, where, "baseline", link.baseline);
  link.floor = get_nonneg(obj, where, "floor", link.floor);
  return link;
}

RegMatrix parse_phi(const json& obj, const std::string& where, const std::string& key,
                    const RegMatrix& fallback) {
  const std::string v = get_string(obj, where, key, "");
  if (v.empty()) {
    return fallback;
  }
  if (v == "identity") {
    return RegMatrix::identity();
  }
  if (v == "first_difference") {
    return RegMatrix::first_difference();
  }
  throw ConfigError(path_of(where, key) + " must be \"identity\" or \"first_difference\"");
}

void parse_batch(const json& obj, MethodSettings& s) {
  const std::string w = "batch";
  check_keys(obj, w,
             {"nu", "ell_link", "sigma_link", "u_length_scale", "u_magnitude", "u_nu", "jitter",
              "lambda_f", "lambda_ell", "lambda_sigma", "rho_f", "rho_ell", "rho_sigma", "phi_f",
              "phi_ell", "phi_sigma"});
  auto& b = s.batch;
  b.nu = get_nu(obj, w, "nu", b.nu);
  b.u_nu = get_nu(obj, w, "u_nu", b.u_nu);
  if (obj.contains("ell_link")) {
    b.ell_link = parse_link(obj.at("ell_link"), w + ".ell_link", b.ell_link);
  }
  if (obj.contains("sigma_link")) {
    b.sigma_link = parse_link(obj.at("sigma_link"), w + ".sigma_link", b.sigma_link);
  }
  b.u_length_scale = get_positive(obj, w, "u_length_scale", b.u_length_scale);
  b.u_magnitude = get_positive(obj, w, "u_magnitude", b.u_magnitude);
  b.jitter = get_nonneg(obj, w, "jitter", b.jitter);
  auto& r = s.batch_reg;
  r.f.lambda = get_nonneg(obj, w, "lambda_f", r.f.lambda);
  r.ell.lambda = get_nonneg(obj, w, "lambda_ell", r.ell.lambda);
  r.sigma.lambda = get_nonneg(obj, w, "lambda_sigma", r.sigma.lambda);
  r.f.rho = get_positive(obj, w, "rho_f", r.f.rho);
  r.ell.rho = get_positive(obj, w, "rho_ell", r.ell.rho);
  r.sigma.rho = get_positive(obj, w, "rho_sigma", r.sigma.rho);
  r.f.phi = parse_phi(obj, w, "phi_f", r.f.phi);
  r.ell.phi = parse_phi(obj, w, "phi_ell", r.ell.phi);
  r.sigma.phi = parse_phi(obj, w, "phi_sigma", r.sigma.phi);
}

void parse_state_space(const json& obj, MethodSettings& s) {
  const std::string w = "state_space";
  check_keys(obj, w,
             {"ell_link", "sigma_link", "u_length_scale", "u_magnitude", "p0", "scheme",
              "lambda_f", "lambda_ell", "lambda_sigma", "rho_f", "rho_ell", "rho_sigma"});
  auto& m = s.ss;
  if (obj.contains("ell_link")) {
    m.ell_link = parse_link(obj.at("ell_link"), w + ".ell_link", m.ell_link);
  }
  if (obj.contains("sigma_link")) {
    m.sigma_link = parse_link(obj.at("sigma_link"), w + ".sigma_link", m.sigma_link);
  }
  m.u_length_scale = get_positive(obj, w, "u_length_scale", m.u_length_scale);
  m.u_magnitude = get_positive(obj, w, "u_magnitude", m.u_magnitude);
  if (obj.contains("p0") && !obj.at("p0").is_null()) {
    const json& p = obj.at("p0");
    Eigen::Matrix3d p0;
    if (!p.is_array() || p.size() != 3) {
      throw ConfigError(w + ".p0 must be a 3x3 array");
    }
    for (int i = 0; i < 3; ++i) {
      if (!p[i].is_array() || p[i].size() != 3) {
        throw ConfigError(w + ".p0 must be a 3x3 array");
      }
      for (int j = 0; j < 3; ++j) {
        if (!p[i][j].is_number()) {
          throw ConfigError(w + ".p0 entries must be numbers");
        }
        p0(i, j) = p[i][j].get<double>();
      }
    }
    m.p0 = p0;
  }
  const std::string scheme = get_string(obj, w, "scheme", "");
  if (scheme == "exact-ou") {
    s.scheme = DiscretizationScheme::kExactOu;
  } else if (scheme == "euler-maruyama") {
    s.scheme = DiscretizationScheme::kEulerMaruyama;
  } else if (!scheme.empty()) {
    throw ConfigError(w + ".scheme must be \"exact-ou\" or \"euler-maruyama\"");
  }
  auto& r = s.ss_reg;
  r.f.lambda = get_nonneg(obj, w, "lambda_f", r.f.lambda);
  r.ell.lambda = get_nonneg(obj, w, "lambda_ell", r.ell.lambda);
  r.sigma.lambda = get_nonneg(obj, w, "lambda_sigma", r.sigma.lambda);
  r.f.rho = get_positive(obj, w, "rho_f", r.f.rho);
  r.ell.rho = get_positive(obj, w, "rho_ell", r.ell.rho);
  r.sigma.rho = get_positive(obj, w, "rho_sigma", r.sigma.rho);
}

void parse_admm(const json& obj, AdmmSettings& a) {
  const std::string w = "admm";
  check_keys(obj, w,
             {"max_outer", "tol_primal", "tol_dual", "inner_tol", "inner_max_iters",
              "monotone_slack"});
  a.max_outer = get_int(obj, w, "max_outer", a.max_outer, 1);
  a.tol_primal = obj.contains("tol_primal") && !obj.at("tol_primal").is_null()
                     ? get_positive(obj, w, "tol_primal", 0.0)
                     : a.tol_primal;
  a.tol_dual = obj.contains("tol_dual") && !obj.at("tol_dual").is_null()
                   ? get_positive(obj, w, "tol_dual", 0.0)
                   : a.tol_dual;
  a.inner.tol_grad = get_positive(obj, w, "inner_tol", a.inner.tol_grad);
  a.inner.max_iters = get_int(obj, w, "inner_max_iters", a.inner.max_iters, 1);
  a.monotone_slack = get_nonneg(obj, w, "monotone_slack", a.monotone_slack);
}

}  // namespace

RunSpec parse_run_spec(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc, "",
             {"method", "methods", "runs", "seed", "T", "noise_var", "uq", "nlpd_target",
              "threads", "traces", "batch", "state_space", "admm", "subgradient", "map", "gp"});
  RunSpec spec;
  ExperimentConfig& e = spec.experiment;
  try {
    spec.method = parse_method(get_string(doc, "", "method", std::string(method_name(spec.method))));
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("method: ") + ex.what());
  }
  if (doc.contains("methods")) {
    const json& ms = doc.at("methods");
    if (!ms.is_array() || ms.empty()) {
      throw ConfigError("methods must be a non-empty array of method names");
    }
    e.methods.clear();
    for (const auto& m : ms) {
      if (!m.is_string()) {
        throw ConfigError("methods entries must be strings");
      }
      try {
        e.methods.push_back(parse_method(m.get<std::string>()));
      } catch (const std::invalid_argument& ex) {
        throw ConfigError(std::string("methods: ") + ex.what());
      }
    }
  }
  e.runs = get_int(doc, "", "runs", e.runs, 1);
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) {
      throw ConfigError("seed must be a non-negative integer");
    }
    e.seed = doc.at("seed").get<std::uint64_t>();
  }
  e.steps = get_int(doc, "", "T", e.steps, 3);
  e.noise_var = get_positive(doc, "", "noise_var", e.noise_var);
  e.uq = get_bool(doc, "", "uq", e.uq);
  e.threads = get_int(doc, "", "threads", e.threads, 0);
  e.keep_traces = get_bool(doc, "", "traces", e.keep_traces);
  const std::string target = get_string(doc, "", "nlpd_target", "training");
  if (target == "training") {
    e.nlpd_target = NlpdTarget::kTraining;
  } else if (target == "held_out") {
    e.nlpd_target = NlpdTarget::kHeldOut;
  } else {
    throw ConfigError("nlpd_target must be \"training\" or \"held_out\"");
  }

  MethodSettings& s = e.settings;
  if (doc.contains("batch")) {
    parse_batch(doc.at("batch"), s);
  }
  if (doc.contains("state_space")) {
    parse_state_space(doc.at("state_space"), s);
  }
  if (doc.contains("admm")) {
    parse_admm(doc.at("admm"), s.admm);
  }
  if (doc.contains("subgradient")) {
    const json& g = doc.at("subgradient");
    check_keys(g, "subgradient", {"max_iters", "step"});
    s.subgradient.max_iters = get_int(g, "subgradient", "max_iters", s.subgradient.max_iters, 1);
    s.subgradient.step = get_positive(g, "subgradient", "step", s.subgradient.step);
  }
  if (doc.contains("map")) {
    const json& m = doc.at("map");
    check_keys(m, "map", {"tol_grad", "max_iters"});
    s.map.tol_grad = get_positive(m, "map", "tol_grad", s.map.tol_grad);
    s.map.max_iters = get_int(m, "map", "max_iters", s.map.max_iters, 1);
  }
  if (doc.contains("gp")) {
    const json& g = doc.at("gp");
    check_keys(g, "gp", {"nu"});
    s.gp_nu = get_nu(g, "gp", "nu", s.gp_nu);
  }
  try {
    e.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  return spec;
}

RunSpec load_run_spec(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw ConfigError("cannot read config " + file.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_spec(ss.str());
}

}  // namespace rnsgp
