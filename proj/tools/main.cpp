// qpmp: optimal-control extremals of open quantum systems from a JSON config.
//
// Exit codes: 0 success (at least one start converged / verdict produced),
// 1 configuration or file-format error, 2 numerical failure or no convergence.

#include <filesystem>
#include <future>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "config.hpp"
#include "output.hpp"

namespace fs = std::filesystem;
using namespace qpmp;
using namespace qpmp::cli;

namespace {

constexpr int kOk = 0, kConfigExit = 1, kNumericExit = 2;

/// Numerical failure tagged with the stage it happened in.
struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& msg) : std::runtime_error(stage + ": " + msg) {}
};

bool is_config_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::Config:
    case ErrorCode::Hermiticity:
    case ErrorCode::NegativeRate:
    case ErrorCode::StateValidity:
    case ErrorCode::InvalidDimension:
    case ErrorCode::Shape:
    case ErrorCode::EnumerationSize:
    case ErrorCode::Format:
      return true;
    default:
      return false;
  }
}

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (is_config_code(e.code())) throw;
    throw StageError(name, e.what());
  }
}

struct Options {
  std::string config, out = "qpmp_out", solution;
  std::optional<std::uint64_t> seed;
  std::optional<int> starts, grid;
  int theorem = 0;
};

RunConfig load(const Options& o) {
  RunConfig cfg = load_config(o.config);
  if (o.seed) cfg.solver.seed = *o.seed;
  if (o.starts) cfg.solver.starts = *o.starts;
  if (o.grid) cfg.solver.intervals = *o.grid;
  if (cfg.solver.starts < 1 || cfg.solver.intervals < 1) throw ConfigError(o.config, 0, "--starts and --grid must be >= 1");
  return cfg;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) fail(ErrorCode::Format, "cannot create output directory " + dir + ": " + ec.message());
  return p;
}

/// Solves every start; starts run concurrently, results stay in start order.
std::vector<ExtremalSolution> run_starts(const RunConfig& cfg, const ProblemSpec& spec) {
  const auto inits = initial_policies(cfg, spec);
  std::vector<ExtremalSolution> out;
  const unsigned width = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(inits.size())));
  for (std::size_t b = 0; b < inits.size(); b += width) {
    std::vector<std::future<ExtremalSolution>> jobs;
    for (std::size_t i = b; i < std::min(inits.size(), b + width); ++i) {
      jobs.push_back(std::async(std::launch::async, [&, i] {
        if (spec.free_horizon()) return optimize_free_horizon(spec, cfg.horizon_lo, cfg.horizon_hi, cfg.solver, inits[i]).solution;
        return solve(spec, inits[i], cfg.solver);
      }));
    }
    for (auto& j : jobs) out.push_back(j.get());
  }
  return out;
}

void add_solution(Report& r, const std::string& prefix, const ExtremalSolution& s) {
  r.add(prefix + "objective", s.objective);
  r.add(prefix + "horizon", s.policy.duration());
  r.add(prefix + "converged", s.convergence.converged);
  r.add(prefix + "status", s.convergence.status);
  r.add(prefix + "iterations", s.convergence.iterations);
  r.add(prefix + "stationarity", s.convergence.stationarity);
  r.add(prefix + "stationarity_scale", s.convergence.stationarity_scale);
  r.add(prefix + "polished", s.convergence.polished);
  r.add(prefix + "residual.transversality", s.residuals.transversality);
  r.add(prefix + "residual.periodicity", s.residuals.periodicity);
  r.add(prefix + "residual.normalization", s.residuals.normalization);
  r.add(prefix + "residual.trace", s.residuals.trace);
  r.add(prefix + "residual.pontryagin_variation", s.residuals.pontryagin_variation);
  r.add(prefix + "residual.horizon_derivative", s.residuals.horizon_derivative);
  r.add(prefix + "residual.free_horizon", s.residuals.free_horizon);
}

void add_structure(Report& r, const StructureReport& s) {
  const auto& seg = s.segmentation;
  r.add("structure.segments", seg.segments.size());
  for (std::size_t i = 0; i < seg.segments.size(); ++i) {
    const auto& g = seg.segments[i];
    r.add("structure.segment." + std::to_string(i + 1),
          "channel=" + std::to_string(g.channel + 1) + " label=" + to_string(g.label) + " start=" + num(g.start) + " end=" + num(g.end));
  }
  r.add("structure.junctions", seg.junctions.size());
  for (std::size_t i = 0; i < seg.junctions.size(); ++i) {
    const auto& j = seg.junctions[i];
    r.add("structure.junction." + std::to_string(i + 1), "channel=" + std::to_string(j.channel + 1) + " type=" + to_string(j.type) +
                                                             " time=" + num(j.time) + " branch_order=" + std::to_string(j.branch_order));
  }
  r.add("structure.ambiguous_intervals", seg.ambiguous_intervals.size());
  r.add("counts.n_spec", s.structure.special_points);
  r.add("counts.n_sing", s.structure.singular_branches);
  r.add("counts.alpha", s.structure.alpha);
  r.add("counts.beta", s.structure.beta);
  r.add("counts.parameters", static_cast<long long>(s.counts.p_total));
  r.add("counts.constraints", static_cast<long long>(s.counts.c_total));
  r.add("counts.deficit", static_cast<long long>(s.counts.deficit()));
  r.add("counts.verdict", s.counts.verdict());
  r.add("theorem1.verdict", to_string(s.theorem1.verdict));
  r.add("theorem1.reason", s.theorem1.reason);
  r.add("corners.count", s.corners.junctions.size());
  r.add("corners.max_costate_jump", s.corners.max_costate_jump);
  r.add("corners.max_pontryagin_jump", s.corners.max_pontryagin_jump);
  r.add("corners.max_switching", s.corners.max_switching);
  r.add("pontryagin_variation", s.pontryagin_variation);
}

void emit_solution_files(const fs::path& out, const RunConfig& cfg, const ExtremalSolution& best, const StructureReport& st, Report& r) {
  write_trajectory_csv((out / "trajectory.csv").string(), best, st.segmentation);
  write_diagnostics_csv((out / "diagnostics.csv").string(), best);
  write_policy_file((out / "policy.csv").string(), cfg, best.policy, best.policy.duration());
  r.add("files.trajectory", "trajectory.csv");
  r.add("files.diagnostics", "diagnostics.csv");
  r.add("files.policy", "policy.csv");
  r.add("files.report", "report.txt");
}

int cmd_solve(const Options& o, bool periodic) {
  const RunConfig cfg = load(o);
  if (cfg.periodic != periodic)
    throw ConfigError(o.config, qpmp::cli::detail::line_of(cfg.text, "/problem/mode"),
                      std::string("/problem/mode: config is ") + (cfg.periodic ? "periodic; use solve-periodic" : "terminal; use solve-terminal"));
  const ProblemSpec spec = build_problem(cfg);
  const fs::path out = prepare_out(o.out);
  const auto runs = stage(periodic ? "periodic solve" : "terminal solve", [&] { return run_starts(cfg, spec); });
  std::size_t best_i = 0;
  bool any = false;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].objective > runs[best_i].objective) best_i = i;
    any = any || runs[i].convergence.converged;
  }
  const ExtremalSolution& best = runs[best_i];
  const ProblemSpec best_spec = spec.with_horizon(best.policy.duration());
  const StructureReport st = stage("classification", [&] { return analyze_structure(best_spec, best); });

  Report r("qpmp-report/1");
  r.add("command", periodic ? "solve-periodic" : "solve-terminal");
  r.add("config", o.config);
  r.add("model", cfg.model_id);
  r.add("mode", periodic ? "periodic" : "terminal");
  r.add("free_horizon", cfg.free_horizon);
  r.add("grid", cfg.solver.intervals);
  r.add("starts", cfg.solver.starts);
  r.add("seed", static_cast<long long>(cfg.solver.seed));
  r.add("converged_starts", static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const auto& s) { return s.convergence.converged; })));
  r.add("best.start", best_i + 1);
  add_solution(r, "best.", best);
  if (periodic) r.add("best.second_eigen_modulus", best.second_eigen_modulus);
  r.add("best.abnormal", best.abnormal);
  add_structure(r, st);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string p = "start." + std::to_string(i + 1) + ".";
    r.add(p + "objective", runs[i].objective);
    r.add(p + "converged", runs[i].convergence.converged);
    r.add(p + "status", runs[i].convergence.status);
    r.add(p + "transversality", runs[i].residuals.transversality);
  }
  emit_solution_files(out, cfg, best, st, r);
  r.write((out / "report.txt").string());
  std::cout << "J = " << num(best.objective) << " (start " << best_i + 1 << ", " << best.convergence.status << ")\n";
  if (!any) {
    std::cerr << "qpmp: no start converged (best stationarity " << best.convergence.stationarity << " vs scale "
              << best.convergence.stationarity_scale << ")\n";
    return kNumericExit;
  }
  return kOk;
}

int cmd_classify(const Options& o) {
  PolicyFile pf = read_policy_file(o.solution);
  const ProblemSpec spec = build_problem(pf.config);
  const ExtremalSolution sol = stage("evaluation", [&] { return evaluate_solution(spec, pf.policy); });
  const StructureReport st = stage("classification", [&] { return analyze_structure(spec, sol); });
  Report r("qpmp-structure/1");
  r.add("command", "classify");
  r.add("solution", fs::path(o.solution).filename().string());
  r.add("model", pf.config.model_id);
  r.add("objective", sol.objective);
  r.add("residual.pontryagin_variation", sol.residuals.pontryagin_variation);
  add_structure(r, st);
  const std::string text = r.str();
  std::cout << text;
  if (!o.out.empty() && o.out != "qpmp_out") {
    const fs::path out = prepare_out(o.out);
    r.write((out / "structure.txt").string());
  }
  return kOk;
}

int cmd_verify(const Options& o) {
  const RunConfig cfg = load(o);
  const ProblemSpec spec = build_problem(cfg);
  Report r("qpmp-verdict/1");
  r.add("command", "verify");
  r.add("theorem", o.theorem);
  r.add("model", cfg.model_id);
  Verdict v = Verdict::NotApplicable;
  std::string reason;
  switch (o.theorem) {
    case 1: {
      if (spec.periodic()) {
        reason = "periodic problem";
        break;
      }
      const auto runs = stage("terminal solve", [&] { return run_starts(cfg, spec); });
      const auto& best = best_of(runs);
      const auto st = stage("classification", [&] { return analyze_structure(spec.with_horizon(best.policy.duration()), best); });
      v = st.theorem1.verdict;
      reason = st.theorem1.reason;
      r.add("objective", best.objective);
      r.add("converged", best.convergence.converged);
      r.add("first_regular", st.theorem1.first_regular);
      r.add("last_regular", st.theorem1.last_regular);
      r.add("degeneracy", st.theorem1.degeneracy);
      r.add("switching_peak", st.theorem1.switching_peak);
      add_structure(r, st);
      break;
    }
    case 2: {
      if (!spec.periodic()) {
        reason = "needs a periodic problem";
        break;
      }
      const auto runs = stage("periodic solve", [&] { return run_starts(cfg, spec); });
      const auto& best = best_of(runs);
      const int n = cfg.periods;
      const ProblemSpec multi = spec.with_horizon(n * best.policy.duration());
      const auto check = stage("period-multiple check", [&] { return period_multiple_check(spec, best, n); });
      const auto longer = stage("re-optimization over n periods", [&] { return solve(multi, best.policy.repeated(n), cfg.solver); });
      const bool monotone = longer.objective >= best.objective - 1e-8;
      r.add("periods", n);
      r.add("objective_T", best.objective);
      r.add("objective_nT", longer.objective);
      r.add("monotone", monotone);
      r.add("violation", check.violation);
      r.add("relative_violation", check.relative_violation);
      r.add("periodic_stationarity", check.periodic_stationarity);
      r.add("improvable", check.improvable);
      r.add("second_eigen_modulus", check.second_eigen_modulus);
      r.add("costate_decay_rate", check.costate_decay_rate);
      if (!monotone) {
        v = Verdict::Fail;
        reason = "re-optimized J(nT) below J(T)";
      } else if (check.improvable) {
        v = Verdict::Pass;
        reason = "periodic extremal is improvable over n periods";
      } else {
        v = Verdict::NotApplicable;
        reason = "periodic extremal already stationary over n periods";
      }
      break;
    }
    case 3: {
      try {
        const auto rep = stage("bang-bang verification", [&] { return verify_theorem3(spec, cfg.solver, cfg.oracle); });
        v = rep.verdict;
        reason = rep.reason;
        r.add("oracle_objective", rep.oracle_objective);
        r.add("best_objective", rep.best_objective);
        std::string ranks;
        for (auto k : rep.krylov_ranks) ranks += (ranks.empty() ? "" : " ") + std::to_string(k);
        r.add("krylov_ranks", ranks);
        r.add("full_rank", static_cast<long long>(rep.full_rank));
        for (std::size_t i = 0; i < rep.starts.size(); ++i) {
          const auto& s = rep.starts[i];
          r.add("start." + std::to_string(i + 1), "objective=" + num(s.objective) + " bang_fraction=" + num(s.bang_fraction) +
                                                      " converged=" + (s.converged ? "true" : "false") +
                                                      " matches_oracle=" + (s.matches_oracle ? "true" : "false"));
        }
      } catch (const StageError& e) {
        if (std::string(e.what()).find("precondition") == std::string::npos) throw;
        reason = e.what();
      }
      break;
    }
    case 4: {
      std::size_t k = 0;
      if (cfg.collision_channel > 0) {
        k = static_cast<std::size_t>(cfg.collision_channel) - 1;
      } else {
        while (k < spec.model.channel_count() && spec.model.control(k).kind != ChannelKind::Collision) ++k;
        if (k == spec.model.channel_count()) {
          reason = "no collision channel";
          break;
        }
      }
      try {
        const auto rep = stage("singular-subarc verification", [&] { return verify_theorem4(spec, k, cfg.solver, cfg.perturbations); });
        v = rep.verdict;
        reason = rep.reason;
        r.add("collision_channel", k + 1);
        r.add("objective", rep.objective);
        r.add("bang_fraction", rep.bang_fraction);
        r.add("singular_intervals", rep.singular_intervals.size());
        r.add("ambiguous_intervals", rep.ambiguous_intervals.size());
        r.add("perturbations", rep.perturbations);
        r.add("max_objective_change", rep.max_objective_change);
      } catch (const StageError& e) {
        if (std::string(e.what()).find("precondition") == std::string::npos) throw;
        reason = e.what();
      }
      break;
    }
    default:
      throw ConfigError(o.config, 0, "--theorem must be 1, 2, 3 or 4");
  }
  r.add("verdict", to_string(v));
  r.add("reason", reason);
  const fs::path out = prepare_out(o.out);
  r.write((out / "verdict.txt").string());
  std::cout << "theorem " << o.theorem << ": " << to_string(v) << " (" << reason << ")\n";
  return kOk;
}

int cmd_qre_bangbang(const Options& o) {
  const RunConfig cfg = load(o);
  const ProblemSpec spec = build_problem(cfg);
  const auto orc = stage("bang-bang enumeration", [&] { return brute_force_bangbang(spec, cfg.oracle); });
  const fs::path out = prepare_out(o.out);
  const ControlPolicy best = orc.best.to_policy(0.0, spec.horizon(), bounds_of(spec.model));
  Report r("qpmp-bangbang/1");
  r.add("command", "qre-bangbang");
  r.add("model", cfg.model_id);
  r.add("grid", cfg.oracle.grid_points);
  r.add("max_switches", cfg.oracle.max_switches);
  r.add("candidates", orc.candidates);
  r.add("objective", orc.objective);
  for (std::size_t k = 0; k < orc.best.channels.size(); ++k) {
    const auto& c = orc.best.channels[k];
    std::string legs, times;
    for (double l : c.legs) legs += (legs.empty() ? "" : " ") + num(l);
    for (double t : c.times) times += (times.empty() ? "" : " ") + num(t);
    r.add("channel." + std::to_string(k + 1) + ".legs", legs);
    r.add("channel." + std::to_string(k + 1) + ".switch_times", times);
  }
  write_policy_file((out / "policy.csv").string(), cfg, best, spec.horizon());
  r.add("files.policy", "policy.csv");
  r.write((out / "report.txt").string());
  std::cout << "oracle J = " << num(orc.objective) << " over " << orc.candidates << " candidates\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pontryagin extremals for open quantum systems"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sc, bool needs_config) {
    auto* c = sc->add_option("--config", o.config, "JSON run configuration");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sc->add_option("--out", o.out, "output directory");
    sc->add_option("--seed", o.seed, "override solver.seed");
    sc->add_option("--starts", o.starts, "override solver.starts");
    sc->add_option("--grid", o.grid, "override solver.grid");
  };
  auto* st = app.add_subcommand("solve-terminal", "solve a terminal-time problem");
  common(st, true);
  auto* sp = app.add_subcommand("solve-periodic", "solve a periodic problem");
  common(sp, true);
  auto* cl = app.add_subcommand("classify", "arc structure of a policy file");
  cl->add_option("solution", o.solution, "policy.csv written by solve-*")->required();
  cl->add_option("--out", o.out, "also write structure.txt here");
  auto* vf = app.add_subcommand("verify", "check an arc-structure theorem (1-4)");
  common(vf, true);
  vf->add_option("--theorem", o.theorem, "1, 2, 3 or 4")->required();
  auto* qb = app.add_subcommand("qre-bangbang", "exhaustive bang-bang search on a switch grid");
  common(qb, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigExit;
  }

  try {
    if (*st) return cmd_solve(o, false);
    if (*sp) return cmd_solve(o, true);
    if (*cl) return cmd_classify(o);
    if (*vf) return cmd_verify(o);
    if (*qb) return cmd_qre_bangbang(o);
  } catch (const ConfigError& e) {
    std::cerr << "qpmp: config error: " << e.path();
    if (e.line() > 0) std::cerr << ", line " << e.line();
    std::cerr << ": " << e.what() << "\n";
    return kConfigExit;
  } catch (const StageError& e) {
    std::cerr << "qpmp: numerical failure in " << e.what() << "\n";
    return kNumericExit;
  } catch (const Error& e) {
    std::cerr << "qpmp: " << e.what() << "\n";
    return is_config_code(e.code()) ? kConfigExit : kNumericExit;
  }
  return kOk;
}
