#pragma once

// JSON run configuration for the qpmp command-line tool.

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpmp/qpmp.hpp"

namespace qpmp::cli {

using nlohmann::json;

inline constexpr const char* kConfigSchema = "qpmp-config/1";

/// Config problem with a 1-based line in the source text (0 if unknown).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, int line, const std::string& msg)
      : std::runtime_error(msg), path_(std::move(path)), line_(line) {}
  const std::string& path() const { return path_; }
  int line() const { return line_; }

 private:
  std::string path_;
  int line_;
};

enum class InitialPolicyKind { Random, Harmonic, Constant };

struct RunConfig {
  std::string source;  // config file path
  std::string text;
  json doc;

  std::string model_id;
  LambdaSystemParams lambda;
  TwoLevelParams two_level;
  RandomLindbladParams random;
  std::vector<std::pair<int, std::pair<double, double>>> bounds;  // 1-based channel -> (min, max)

  bool periodic = false;
  double horizon = 1.0;
  bool free_horizon = false;
  double horizon_lo = 0.0, horizon_hi = 0.0;
  json initial_state;  // terminal only

  SolverConfig solver;
  InitialPolicyKind initial_policy = InitialPolicyKind::Random;
  double harmonic_offset_mhz = -1.58, harmonic_amplitude_mhz = 1.61;
  std::vector<double> constant_values;

  int periods = 2;
  int collision_channel = 0;  // 1-based, 0 = first collision channel
  int perturbations = 20;
  OracleOptions oracle;
};

namespace detail {

/// Best-effort line of a JSON pointer: the keys of the path are located one
/// after another in the source text.
inline int line_of(const std::string& text, const std::string& pointer) {
  std::size_t pos = 0;
  std::stringstream ss(pointer);
  std::string part;
  bool found = false;
  while (std::getline(ss, part, '/')) {
    if (part.empty()) continue;
    if (std::all_of(part.begin(), part.end(), ::isdigit)) {
      // Array element: skip that many '{' or ',' separators is unreliable; keep the parent position.
      continue;
    }
    const auto p = text.find("\"" + part + "\"", pos);
    if (p == std::string::npos) break;
    pos = p;
    found = true;
  }
  if (!found) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

inline int line_of_offset(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

class Reader {
 public:
  Reader(const RunConfig& cfg) : cfg_(cfg) {}

  [[noreturn]] void error(const std::string& pointer, const std::string& msg) const {
    throw ConfigError(cfg_.source, line_of(cfg_.text, pointer), pointer + ": " + msg);
  }

  const json& object(const json& parent, const std::string& key, const std::string& where) const {
    const json& v = parent.at(key);
    if (!v.is_object()) error(where + "/" + key, "expected an object");
    return v;
  }

  void allowed(const json& obj, const std::string& where, std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : obj.items())
      if (!ok.count(k)) error(where + "/" + k, "unknown key '" + k + "'");
  }

  double number(const json& obj, const std::string& where, const char* key, double fallback) const {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    if (!v.is_number()) error(where + "/" + key, "expected a number");
    return v.get<double>();
  }

  int integer(const json& obj, const std::string& where, const char* key, int fallback, int min_value) const {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) error(where + "/" + key, "expected an integer");
    const auto x = v.get<long long>();
    if (x < min_value || x > std::numeric_limits<int>::max()) error(where + "/" + key, "must be >= " + std::to_string(min_value));
    return static_cast<int>(x);
  }

  bool boolean(const json& obj, const std::string& where, const char* key, bool fallback) const {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean()) error(where + "/" + key, "expected true or false");
    return obj.at(key).get<bool>();
  }

  std::string string(const json& obj, const std::string& where, const char* key, const std::string& fallback) const {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_string()) error(where + "/" + key, "expected a string");
    return obj.at(key).get<std::string>();
  }

 private:
  const RunConfig& cfg_;
};

/// [[re, im], ...] or [re, ...] as a complex column vector.
inline Eigen::VectorXcd parse_ket(const Reader& r, const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) r.error(where, "expected a non-empty array of amplitudes");
  Eigen::VectorXcd k(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const json& a = v[i];
    if (a.is_number())
      k(static_cast<Eigen::Index>(i)) = a.get<double>();
    else if (a.is_array() && a.size() == 2 && a[0].is_number() && a[1].is_number())
      k(static_cast<Eigen::Index>(i)) = Complex(a[0].get<double>(), a[1].get<double>());
    else
      r.error(where + "/" + std::to_string(i), "amplitude must be a number or [re, im]");
  }
  if (k.norm() == 0.0) r.error(where, "zero vector");
  return k / k.norm();
}

/// Named two-level states and operators.
inline ComplexMatrix parse_two_level_state(const Reader& r, const json& v, const std::string& where) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    Eigen::VectorXcd k(2);
    if (s == "ground") k << 1, 0;
    else if (s == "excited") k << 0, 1;
    else if (s == "plus") k << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
    else if (s == "minus") k << 1 / std::sqrt(2.0), -1 / std::sqrt(2.0);
    else if (s == "mixed") return 0.5 * ComplexMatrix::Identity(2, 2);
    else r.error(where, "unknown state '" + s + "' (ground, excited, plus, minus, mixed)");
    return pure_state(k);
  }
  if (v.is_object() && v.contains("ket")) return pure_state(parse_ket(r, v.at("ket"), where + "/ket"));
  if (v.is_object() && v.contains("thermal")) {
    if (!v.at("thermal").is_number()) r.error(where + "/thermal", "expected a number");
    return thermal_state(v.at("thermal").get<double>());
  }
  r.error(where, "expected a state name, {\"ket\": [...]} or {\"thermal\": p0}");
}

inline ComplexMatrix parse_two_level_observable(const Reader& r, const json& v, const std::string& where) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "sigma_x") return pauli_x();
    if (s == "sigma_y") return pauli_y();
    if (s == "sigma_z") return pauli_z();
    r.error(where, "unknown observable '" + s + "' (sigma_x, sigma_y, sigma_z, or {\"projector\": ket})");
  }
  if (v.is_object() && v.contains("projector")) return pure_state(parse_ket(r, v.at("projector"), where + "/projector"));
  r.error(where, "expected an observable name or {\"projector\": ket}");
}

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text, const std::string& source) {
  RunConfig cfg;
  cfg.source = source;
  cfg.text = text;
  try {
    cfg.doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source, detail::line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0), std::string("malformed JSON: ") + e.what());
  }
  detail::Reader r(cfg);
  const json& d = cfg.doc;
  if (!d.is_object()) r.error("", "top level must be an object");
  r.allowed(d, "", {"schema", "model", "problem", "bounds", "solver", "initial_policy", "verify"});
  if (d.contains("schema") && r.string(d, "", "schema", "") != kConfigSchema)
    r.error("/schema", "unsupported schema (expected " + std::string(kConfigSchema) + ")");
  if (!d.contains("model")) r.error("/model", "missing model section");
  if (!d.contains("problem")) r.error("/problem", "missing problem section");

  // Model.
  const json& m = r.object(d, "model", "");
  cfg.model_id = r.string(m, "/model", "id", "");
  const auto& ids = model_identifiers();
  if (std::find(ids.begin(), ids.end(), cfg.model_id) == ids.end()) {
    std::string list;
    for (const auto& i : ids) list += (list.empty() ? "" : ", ") + i;
    r.error("/model/id", "unknown model '" + cfg.model_id + "' (" + list + ")");
  }
  if (cfg.model_id == "lambda") {
    r.allowed(m, "/model", {"id", "delta_mhz", "g1_khz", "g2_khz", "gamma1_per_ms", "gamma2_per_ms", "gamma3_per_ms", "convention", "delta_sign", "g2_sign"});
    auto& p = cfg.lambda;
    p.delta_mhz = r.number(m, "/model", "delta_mhz", p.delta_mhz);
    p.g1_khz = r.number(m, "/model", "g1_khz", p.g1_khz);
    p.g2_khz = r.number(m, "/model", "g2_khz", p.g2_khz);
    p.gamma1_per_ms = r.number(m, "/model", "gamma1_per_ms", p.gamma1_per_ms);
    p.gamma2_per_ms = r.number(m, "/model", "gamma2_per_ms", p.gamma2_per_ms);
    p.gamma3_per_ms = r.number(m, "/model", "gamma3_per_ms", p.gamma3_per_ms);
    p.delta_sign = r.number(m, "/model", "delta_sign", p.delta_sign);
    p.g2_sign = r.number(m, "/model", "g2_sign", p.g2_sign);
    const auto conv = r.string(m, "/model", "convention", "ordinary-2pi");
    if (conv == "ordinary-2pi")
      p.convention = FrequencyConvention::Ordinary2Pi;
    else if (conv == "angular")
      p.convention = FrequencyConvention::Angular;
    else
      r.error("/model/convention", "expected 'ordinary-2pi' or 'angular'");
  } else if (cfg.model_id == "random-lindblad") {
    r.allowed(m, "/model", {"id", "dimension", "jumps", "rate", "seed"});
    auto& p = cfg.random;
    p.dimension = r.integer(m, "/model", "dimension", p.dimension, 2);
    p.jumps = r.integer(m, "/model", "jumps", p.jumps, 0);
    p.rate = r.number(m, "/model", "rate", p.rate);
    p.seed = static_cast<std::uint64_t>(r.integer(m, "/model", "seed", static_cast<int>(p.seed), 0));
  } else {
    r.allowed(m, "/model", {"id", "delta", "delta_x", "gamma", "p0", "coherent", "observable", "targets"});
    auto& p = cfg.two_level;
    p.variant = cfg.model_id == "two-level-closed"    ? TwoLevelVariant::Closed
                : cfg.model_id == "two-level-thermal" ? TwoLevelVariant::Thermal
                                                      : TwoLevelVariant::Collision;
    p.delta = r.number(m, "/model", "delta", p.delta);
    p.delta_x = r.number(m, "/model", "delta_x", p.delta_x);
    p.gamma = r.number(m, "/model", "gamma", p.gamma);
    p.p0 = r.number(m, "/model", "p0", p.p0);
    p.coherent = r.boolean(m, "/model", "coherent", p.variant != TwoLevelVariant::Collision);
    if (m.contains("observable")) p.observable = detail::parse_two_level_observable(r, m.at("observable"), "/model/observable");
    if (m.contains("targets")) {
      const json& t = m.at("targets");
      if (!t.is_array()) r.error("/model/targets", "expected an array");
      if (p.variant != TwoLevelVariant::Collision) r.error("/model/targets", "collision targets need model two-level-collision");
      for (std::size_t i = 0; i < t.size(); ++i) {
        const std::string w = "/model/targets/" + std::to_string(i);
        if (!t[i].is_object() || !t[i].contains("state")) r.error(w, "expected {\"state\": ..., \"min\": .., \"max\": ..}");
        r.allowed(t[i], w, {"state", "min", "max"});
        p.targets.push_back({detail::parse_two_level_state(r, t[i].at("state"), w + "/state"), r.number(t[i], w, "min", 0.0),
                             r.number(t[i], w, "max", 1.0)});
      }
    }
  }

  // Channel bounds.
  if (d.contains("bounds")) {
    const json& b = d.at("bounds");
    if (!b.is_array()) r.error("/bounds", "expected an array of {channel, min, max}");
    for (std::size_t i = 0; i < b.size(); ++i) {
      const std::string w = "/bounds/" + std::to_string(i);
      if (!b[i].is_object()) r.error(w, "expected an object");
      r.allowed(b[i], w, {"channel", "min", "max"});
      const int ch = r.integer(b[i], w, "channel", 0, 1);
      if (ch == 0) r.error(w, "missing channel (1-based)");
      const double lo = r.number(b[i], w, "min", -std::numeric_limits<double>::infinity());
      const double hi = r.number(b[i], w, "max", std::numeric_limits<double>::infinity());
      if (lo > hi) r.error(w, "channel " + std::to_string(ch) + " has u_min > u_max (" + std::to_string(lo) + " > " + std::to_string(hi) + ")");
      cfg.bounds.push_back({ch, {lo, hi}});
    }
  }

  // Problem.
  const json& pr = r.object(d, "problem", "");
  r.allowed(pr, "/problem", {"mode", "horizon", "free_horizon", "horizon_range", "initial_state"});
  const auto mode = r.string(pr, "/problem", "mode", "terminal");
  if (mode != "terminal" && mode != "periodic") r.error("/problem/mode", "expected 'terminal' or 'periodic'");
  cfg.periodic = mode == "periodic";
  if (!pr.contains("horizon")) r.error("/problem/horizon", "missing horizon");
  cfg.horizon = r.number(pr, "/problem", "horizon", 1.0);
  if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) r.error("/problem/horizon", "horizon must be positive and finite");
  cfg.free_horizon = r.boolean(pr, "/problem", "free_horizon", false);
  if (cfg.free_horizon) {
    if (!pr.contains("horizon_range") || !pr.at("horizon_range").is_array() || pr.at("horizon_range").size() != 2 ||
        !pr.at("horizon_range")[0].is_number() || !pr.at("horizon_range")[1].is_number())
      r.error("/problem/horizon_range", "free horizon needs horizon_range [T_lo, T_hi]");
    cfg.horizon_lo = pr.at("horizon_range")[0].get<double>();
    cfg.horizon_hi = pr.at("horizon_range")[1].get<double>();
    if (!(cfg.horizon_lo > 0.0 && cfg.horizon_hi > cfg.horizon_lo)) r.error("/problem/horizon_range", "need 0 < T_lo < T_hi");
  }
  if (!cfg.periodic) {
    if (!pr.contains("initial_state")) r.error("/problem/initial_state", "terminal problems need an initial_state");
    cfg.initial_state = pr.at("initial_state");
  } else if (pr.contains("initial_state")) {
    r.error("/problem/initial_state", "periodic problems have no initial state");
  }

  // Solver.
  if (d.contains("solver")) {
    const json& s = r.object(d, "solver", "");
    r.allowed(s, "/solver", {"grid", "max_iterations", "stationarity_tol", "newton_iterations", "newton_max_variables", "starts", "seed",
                             "unbounded_scale", "polish_switches", "lbfgs_memory", "scan_points", "horizon_rel_tol",
                             "junction_refinements", "junction_factor"});
    auto& c = cfg.solver;
    c.intervals = r.integer(s, "/solver", "grid", c.intervals, 1);
    c.max_iterations = r.integer(s, "/solver", "max_iterations", c.max_iterations, 0);
    c.stationarity_tol = r.number(s, "/solver", "stationarity_tol", c.stationarity_tol);
    c.newton_iterations = r.integer(s, "/solver", "newton_iterations", c.newton_iterations, 0);
    c.newton_max_variables = r.integer(s, "/solver", "newton_max_variables", c.newton_max_variables, 1);
    c.starts = r.integer(s, "/solver", "starts", c.starts, 1);
    c.seed = static_cast<std::uint64_t>(r.integer(s, "/solver", "seed", static_cast<int>(c.seed), 0));
    c.unbounded_scale = r.number(s, "/solver", "unbounded_scale", c.unbounded_scale);
    c.polish_switches = r.boolean(s, "/solver", "polish_switches", c.polish_switches);
    c.lbfgs_memory = r.integer(s, "/solver", "lbfgs_memory", c.lbfgs_memory, 0);
    c.scan_points = r.integer(s, "/solver", "scan_points", c.scan_points, 3);
    c.horizon_rel_tol = r.number(s, "/solver", "horizon_rel_tol", c.horizon_rel_tol);
    c.junction_refinements = r.integer(s, "/solver", "junction_refinements", c.junction_refinements, 0);
    c.junction_factor = r.integer(s, "/solver", "junction_factor", c.junction_factor, 2);
  }

  if (d.contains("initial_policy")) {
    const json& ip = r.object(d, "initial_policy", "");
    r.allowed(ip, "/initial_policy", {"kind", "offset_mhz", "amplitude_mhz", "values"});
    const auto kind = r.string(ip, "/initial_policy", "kind", "random");
    if (kind == "random") {
      cfg.initial_policy = InitialPolicyKind::Random;
    } else if (kind == "harmonic") {
      if (cfg.model_id != "lambda") r.error("/initial_policy/kind", "the harmonic reference needs model 'lambda'");
      cfg.initial_policy = InitialPolicyKind::Harmonic;
      cfg.harmonic_offset_mhz = r.number(ip, "/initial_policy", "offset_mhz", cfg.harmonic_offset_mhz);
      cfg.harmonic_amplitude_mhz = r.number(ip, "/initial_policy", "amplitude_mhz", cfg.harmonic_amplitude_mhz);
    } else if (kind == "constant") {
      cfg.initial_policy = InitialPolicyKind::Constant;
      if (!ip.contains("values") || !ip.at("values").is_array()) r.error("/initial_policy/values", "constant policy needs values [u_1, ...]");
      for (const auto& v : ip.at("values")) {
        if (!v.is_number()) r.error("/initial_policy/values", "expected numbers");
        cfg.constant_values.push_back(v.get<double>());
      }
    } else {
      r.error("/initial_policy/kind", "expected random, harmonic or constant");
    }
  }

  if (d.contains("verify")) {
    const json& v = r.object(d, "verify", "");
    r.allowed(v, "/verify", {"periods", "collision_channel", "perturbations", "oracle"});
    cfg.periods = r.integer(v, "/verify", "periods", cfg.periods, 2);
    cfg.collision_channel = r.integer(v, "/verify", "collision_channel", cfg.collision_channel, 1);
    cfg.perturbations = r.integer(v, "/verify", "perturbations", cfg.perturbations, 1);
    if (v.contains("oracle")) {
      const json& o = r.object(v, "oracle", "/verify");
      r.allowed(o, "/verify/oracle", {"grid", "max_switches", "cap"});
      cfg.oracle.grid_points = r.integer(o, "/verify/oracle", "grid", cfg.oracle.grid_points, 1);
      cfg.oracle.max_switches = r.integer(o, "/verify/oracle", "max_switches", cfg.oracle.max_switches, 0);
      if (o.contains("cap")) {
        if (!o.at("cap").is_number_integer() || o.at("cap").get<long long>() < 1) r.error("/verify/oracle/cap", "expected a positive integer");
        cfg.oracle.cap = o.at("cap").get<long long>();
      }
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, 0, "cannot read config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

/// Model with the configured bounds applied.
inline QuantumModel build_model(const RunConfig& cfg) {
  QuantumModel model = [&] {
    if (cfg.model_id == "lambda") return build_lambda_system(cfg.lambda);
    if (cfg.model_id == "random-lindblad") return build_random_lindblad(cfg.random);
    return build_two_level(cfg.two_level);
  }();
  for (const auto& [ch, b] : cfg.bounds) {
    if (ch < 1 || static_cast<std::size_t>(ch) > model.channel_count())
      throw ConfigError(cfg.source, detail::line_of(cfg.text, "/bounds"),
                        "/bounds: channel " + std::to_string(ch) + " does not exist (model has " + std::to_string(model.channel_count()) + ")");
    model = model.with_bounds(static_cast<std::size_t>(ch) - 1, b.first, b.second);
  }
  return model;
}

inline LiouvilleVector build_initial_state(const RunConfig& cfg, const QuantumModel& model) {
  detail::Reader r(cfg);
  const json& v = cfg.initial_state;
  const int n = model.dimension();
  const std::string w = "/problem/initial_state";
  ComplexMatrix rho;
  if (v.is_string() && v.get<std::string>() == "mixed") {
    rho = ComplexMatrix::Identity(n, n) / static_cast<double>(n);
  } else if (v.is_object() && v.contains("basis")) {
    if (!v.at("basis").is_number_integer() || v.at("basis").get<int>() < 0 || v.at("basis").get<int>() >= n)
      r.error(w + "/basis", "basis index must lie in [0, " + std::to_string(n - 1) + "]");
    Eigen::VectorXcd k = Eigen::VectorXcd::Zero(n);
    k(v.at("basis").get<int>()) = 1.0;
    rho = pure_state(k);
  } else if (v.is_object() && v.contains("ket")) {
    const auto k = detail::parse_ket(r, v.at("ket"), w + "/ket");
    if (k.size() != n) r.error(w + "/ket", "expected " + std::to_string(n) + " amplitudes");
    rho = pure_state(k);
  } else if (v.is_object() && v.contains("random_seed")) {
    std::mt19937_64 rng(v.at("random_seed").get<std::uint64_t>());
    rho = random_density(n, rng);
  } else if (n == 2) {
    rho = detail::parse_two_level_state(r, v, w);
  } else {
    r.error(w, "expected \"mixed\", {\"basis\": i}, {\"ket\": [...]} or {\"random_seed\": s}");
  }
  try {
    return vectorize_state(rho, model.basis());
  } catch (const Error& e) {
    r.error(w, e.what());
  }
}

inline ProblemSpec build_problem(const RunConfig& cfg) {
  QuantumModel model = build_model(cfg);
  if (cfg.periodic) return {std::move(model), PeriodicMode{cfg.horizon, cfg.free_horizon}};
  LiouvilleVector rho0 = build_initial_state(cfg, model);
  return {std::move(model), TerminalMode{std::move(rho0), cfg.horizon, cfg.free_horizon}};
}

/// Initial policies, one per start, drawn in order from the seeded generator.
inline std::vector<ControlPolicy> initial_policies(const RunConfig& cfg, const ProblemSpec& spec) {
  std::mt19937_64 rng(cfg.solver.seed);
  std::vector<ControlPolicy> out;
  for (int s = 0; s < cfg.solver.starts; ++s) {
    if (s == 0 && cfg.initial_policy == InitialPolicyKind::Harmonic) {
      out.push_back(harmonic_reference_policy(spec.model, cfg.lambda, spec.horizon(), cfg.solver.intervals, cfg.harmonic_offset_mhz,
                                              cfg.harmonic_amplitude_mhz));
    } else if (s == 0 && cfg.initial_policy == InitialPolicyKind::Constant) {
      if (cfg.constant_values.size() != spec.model.channel_count())
        throw ConfigError(cfg.source, detail::line_of(cfg.text, "/initial_policy/values"),
                          "/initial_policy/values: expected " + std::to_string(spec.model.channel_count()) + " values");
      const auto eff = effective_bounds(spec.model, cfg.solver);
      RealVector fill = Eigen::Map<const RealVector>(cfg.constant_values.data(), static_cast<Eigen::Index>(cfg.constant_values.size()));
      for (std::size_t k = 0; k < eff.size(); ++k) fill(static_cast<Eigen::Index>(k)) = eff[k].clamp(fill(static_cast<Eigen::Index>(k)));
      out.push_back(ControlPolicy::uniform(0.0, spec.horizon(), cfg.solver.intervals, eff, fill));
    } else {
      out.push_back(random_policy(spec, cfg.solver, rng));
    }
  }
  return out;
}

}  // namespace qpmp::cli
