#pragma once

// Terminal and periodic Mayer problems J = <O|rho(t_f)> -> max solved by
// projected adjoint-gradient ascent over piecewise-constant controls.
//
// Terminal:  rho(0) = rho_0,  <psi(T)| = <O_n| = <O| - J <1|.
// Periodic:  rho(T) = rho(0), <psi(0)| = <psi(T)| - <O_n|, <psi|rho> = 0.
//
// For both, dJ/du_k[m] = <psi(t_{m+1})| F_km |rho(t_m)> where F_km is the
// derivative of the interval propagator, i.e. the integral of K_uk over the
// interval.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qpmp/core.hpp"
#include "qpmp/dynamics.hpp"
#include "qpmp/linalg.hpp"
#include "qpmp/liouville_space.hpp"

namespace qpmp {

struct TerminalMode {
  LiouvilleVector initial_state;
  double horizon = 1.0;
  bool free_time = false;
};

struct PeriodicMode {
  double period = 1.0;
  bool free_period = false;
};

struct ProblemSpec {
  QuantumModel model;
  std::variant<TerminalMode, PeriodicMode> mode;

  ProblemSpec(QuantumModel m, std::variant<TerminalMode, PeriodicMode> md) : model(std::move(m)), mode(std::move(md)) { validate(); }

  bool periodic() const { return std::holds_alternative<PeriodicMode>(mode); }
  double horizon() const { return periodic() ? std::get<PeriodicMode>(mode).period : std::get<TerminalMode>(mode).horizon; }
  bool free_horizon() const { return periodic() ? std::get<PeriodicMode>(mode).free_period : std::get<TerminalMode>(mode).free_time; }
  const LiouvilleVector& objective() const { return model.observable(); }
  const LiouvilleVector& initial_state() const {
    if (periodic()) fail(ErrorCode::Precondition, "periodic problems have no prescribed initial state");
    return std::get<TerminalMode>(mode).initial_state;
  }

  ProblemSpec with_horizon(double t) const {
    ProblemSpec s = *this;
    if (periodic())
      std::get<PeriodicMode>(s.mode).period = t;
    else
      std::get<TerminalMode>(s.mode).horizon = t;
    s.validate();
    return s;
  }

 private:
  void validate() const {
    if (!(horizon() > 0.0)) fail(ErrorCode::Config, "control horizon must be positive");
    if (!periodic()) {
      const auto& rho0 = std::get<TerminalMode>(mode).initial_state;
      if (rho0.basis()->dimension() != model.dimension()) fail(ErrorCode::Shape, "initial state dimension mismatch");
      require_density_matrix(rho0.to_matrix());
    }
  }
};

struct SolverConfig {
  int intervals = 512;
  int max_iterations = 2000;
  /// Stop when the largest feasible-ascent component of K_u is below
  /// stationarity_tol * max |K_u|.
  double stationarity_tol = 1e-8;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
  /// Relative objective gain below which an iteration counts as stalled.
  double stall_tol = 1e-15;
  int stall_window = 200;
  /// Unbounded channels get bounds +-U_big, U_big = unbounded_scale * drift spectral radius
  /// unless unbounded_value > 0.
  double unbounded_scale = 100.0;
  double unbounded_value = 0.0;
  /// Snap bound-to-bound transitions of converged grid solutions to exact switching times.
  bool polish_switches = true;
  /// After convergence, subdivide the intervals around nodes where K jumps by
  /// more than junction_tol * max(1, |K(0)|) / 4 and re-solve; the jump at a
  /// junction that falls inside an interval shrinks with the local step.
  int junction_refinements = 2;
  int junction_factor = 8;
  int junction_max_nodes = 8;
  double junction_tol = 1e-7;
  /// L-BFGS memory; 0 gives plain projected Barzilai-Borwein ascent.
  int lbfgs_memory = 20;
  /// Newton refinement with a finite-difference Hessian of the adjoint
  /// gradient, used when at most newton_max_variables are free.
  int newton_iterations = 0;
  int newton_max_variables = 600;
  int starts = 8;
  std::uint64_t seed = 1;
  /// Free-horizon outer search.
  int scan_points = 9;
  double horizon_rel_tol = 1e-9;
  int horizon_max_iterations = 80;
};

struct ConvergenceRecord {
  int iterations = 0;
  int evaluations = 0;
  double stationarity = 0.0;        // max feasible-ascent |K_u| component
  double stationarity_scale = 0.0;  // max |psi| |L_k| |rho|
  bool converged = false;
  bool polished = false;
  std::string status;
  std::vector<double> history;
};

struct BoundaryResiduals {
  double transversality = 0.0;   // terminal: |psi(T) - O_n|; periodic: |psi(0) - psi(T) + O_n|
  double periodicity = 0.0;      // |rho(T) - rho(0)| (periodic)
  double normalization = 0.0;    // max |<psi|rho>|
  double trace = 0.0;            // max |<1|rho> - 1|
  double pontryagin_variation = 0.0;  // (max K - min K) / max(1, |K(0)|)
  double horizon_derivative = 0.0;    // dJ/dT = sum_m K_m h_m / T
  double free_horizon = 0.0;          // max |K| / K scale
};

struct ExtremalSolution {
  ControlPolicy policy;
  Trajectory trajectory;
  DiagnosticsTrace diagnostics;
  RealMatrix gradient;  // dJ/du_k[m]
  double objective = 0.0;
  ConvergenceRecord convergence;
  BoundaryResiduals residuals;
  bool periodic = false;
  bool abnormal = false;
  double second_eigen_modulus = 0.0;  // periodic only

  double pmp_violation() const;
};

// ---------------------------------------------------------------------------
// Periodic boundary problems.

struct FixedPoint {
  RealVector state;
  double residual = 0.0;
  double second_modulus = 0.0;
};

/// Eigenvalue moduli of a one-period propagator, descending.
inline std::vector<double> propagator_moduli(const RealMatrix& p) {
  Eigen::EigenSolver<RealMatrix> es(p, false);
  std::vector<double> mod;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) mod.push_back(std::abs(es.eigenvalues()(i)));
  std::sort(mod.begin(), mod.end(), std::greater<>());
  return mod;
}

/// Unique trace-one fixed vector of a one-period propagator.
inline FixedPoint fixed_point_of(const RealMatrix& p, const RealVector& one) {
  const auto moduli = propagator_moduli(p);
  FixedPoint fp;
  fp.second_modulus = moduli.size() > 1 ? moduli[1] : 0.0;
  if (fp.second_modulus > 1.0 - 1e-8)
    fail(ErrorCode::DegenerateSpectrum, "one-period propagator has a second eigenvalue of modulus " + std::to_string(fp.second_modulus) +
                                            " (fixed point not unique; closed or non-contracting dynamics)");
  const Eigen::Index n = p.rows();
  RealMatrix a(n + 1, n);
  a.topRows(n) = p - RealMatrix::Identity(n, n);
  a.row(n) = one.transpose();
  RealVector b = RealVector::Zero(n + 1);
  b(n) = 1.0;
  fp.state = a.colPivHouseholderQr().solve(b);
  fp.residual = (p * fp.state - fp.state).norm();
  return fp;
}

struct PeriodicCostate {
  RealVector final_costate;  // <psi(T)|
  bool abnormal = false;
  double residual = 0.0;     // | <psi(T)|(P - I) + <O_n| |
};

/// Solves <psi(T)|(P - I) = -<O_n| with <psi(T)|rho*> = 0.
inline PeriodicCostate costate_fixed_point_of(const RealMatrix& p, const RealVector& rho_star, const RealVector& on) {
  const Eigen::Index n = p.rows();
  PeriodicCostate out;
  if (on.norm() <= 1e-13) {
    out.final_costate = RealVector::Zero(n);
    out.abnormal = true;
    return out;
  }
  RealMatrix a(n + 1, n);
  a.topRows(n) = (RealMatrix::Identity(n, n) - p).transpose();
  a.row(n) = rho_star.transpose();
  RealVector b(n + 1);
  b.head(n) = on;
  b(n) = 0.0;
  Eigen::ColPivHouseholderQR<RealMatrix> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < n) fail(ErrorCode::NumericalRank, "periodic costate system is rank deficient (rank " + std::to_string(qr.rank()) + ")");
  out.final_costate = qr.solve(b);
  out.residual = ((p - RealMatrix::Identity(n, n)).transpose() * out.final_costate + on).norm();
  return out;
}

inline LiouvilleVector periodic_state_fixed_point(const QuantumModel& model, const ControlPolicy& policy) {
  const RealMatrix p = horizon_propagator(step_propagators(model, policy));
  return {model.basis(), fixed_point_of(p, model.basis()->identity()).state};
}

/// <psi(T)| of the periodic problem; O_n is formed from the state fixed point.
inline PeriodicCostate periodic_costate_fixed_point(const QuantumModel& model, const ControlPolicy& policy) {
  const RealMatrix p = horizon_propagator(step_propagators(model, policy));
  const RealVector& one = model.basis()->identity();
  const FixedPoint fp = fixed_point_of(p, one);
  const RealVector& o = model.observable().coefficients();
  const RealVector on = o - o.dot(fp.state) * one;
  return costate_fixed_point_of(p, fp.state, on);
}

// ---------------------------------------------------------------------------
// Objective/gradient evaluation.

struct Evaluation {
  double objective = 0.0;
  std::vector<RealMatrix> steps;
  std::vector<RealVector> states;
  double second_modulus = 0.0;
};

inline Evaluation evaluate_objective(const ProblemSpec& spec, const ControlPolicy& policy) {
  Evaluation ev;
  ev.steps = step_propagators(spec.model, policy);
  RealVector initial;
  if (spec.periodic()) {
    const FixedPoint fp = fixed_point_of(horizon_propagator(ev.steps), spec.model.basis()->identity());
    initial = fp.state;
    ev.second_modulus = fp.second_modulus;
  } else {
    initial = spec.initial_state().coefficients();
  }
  ev.states = forward_states(ev.steps, initial);
  ev.objective = spec.objective().coefficients().dot(ev.states.back());
  return ev;
}

inline double objective_value(const ProblemSpec& spec, const ControlPolicy& policy) { return evaluate_objective(spec, policy).objective; }

struct CostateResult {
  std::vector<RealVector> costates;
  bool abnormal = false;
};

inline CostateResult costates_for(const ProblemSpec& spec, const Evaluation& ev) {
  const RealVector& one = spec.model.basis()->identity();
  const RealVector& o = spec.objective().coefficients();
  const RealVector on = o - ev.objective * one;
  CostateResult r;
  RealVector final_costate;
  if (spec.periodic()) {
    const PeriodicCostate pc = costate_fixed_point_of(horizon_propagator(ev.steps), ev.states.front(), on);
    final_costate = pc.final_costate;
    r.abnormal = pc.abnormal;
  } else {
    final_costate = on;
    r.abnormal = on.norm() <= 1e-13;
  }
  r.costates = backward_costates(ev.steps, final_costate);
  return r;
}

/// dJ/du_k[m] for every channel and interval.
inline RealMatrix adjoint_gradient(const ProblemSpec& spec, const ControlPolicy& policy) {
  require_compatible(spec.model, policy);
  const Evaluation ev = evaluate_objective(spec, policy);
  const CostateResult cs = costates_for(spec, ev);
  return interval_switching_integrals(spec.model, policy, ev.states, cs.costates);
}

/// Largest feasible-ascent component of the per-unit-time gradient (K_u units).
inline double feasible_ascent(const ControlPolicy& policy, const RealMatrix& gradient, double* scale = nullptr) {
  double worst = 0.0;
  double biggest = 0.0;
  for (int k = 0; k < policy.channels(); ++k) {
    const auto& b = policy.bound(k);
    const double eps = 1e-10 * std::max(1.0, std::isfinite(b.range()) ? b.range() : 1.0);
    for (int m = 0; m < policy.intervals(); ++m) {
      const double g = gradient(k, m) / policy.step(m);
      const double u = policy.value(k, m);
      biggest = std::max(biggest, std::abs(g));
      double comp = std::abs(g);
      if (u >= b.upper - eps && u <= b.lower + eps)
        comp = 0.0;  // degenerate interval [a, a]
      else if (u >= b.upper - eps)
        comp = std::max(0.0, -g);
      else if (u <= b.lower + eps)
        comp = std::max(0.0, g);
      worst = std::max(worst, comp);
    }
  }
  if (scale) *scale = biggest;
  return worst;
}

/// Natural magnitude of the switching functions: max over nodes and channels
/// of |psi| |L_k|_F |rho|. Stationarity is measured relative to it.
inline double switching_scale(const QuantumModel& model, const std::vector<RealVector>& states, const std::vector<RealVector>& costates) {
  double lk = 0.0;
  for (const auto& c : model.controls()) lk = std::max(lk, c.generator.matrix().norm());
  double s = 0.0;
  for (std::size_t m = 0; m < states.size() && m < costates.size(); ++m) s = std::max(s, costates[m].norm() * states[m].norm());
  return s * lk;
}

inline double ExtremalSolution::pmp_violation() const { return feasible_ascent(policy, gradient); }

/// Spectral radius of the drift generator (scale for "unbounded" channels).
inline double drift_spectral_scale(const QuantumModel& model) {
  Eigen::EigenSolver<RealMatrix> es(model.drift().matrix(), false);
  double r = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) r = std::max(r, std::abs(es.eigenvalues()(i)));
  return r > 0.0 ? r : 1.0;
}

/// Finite bounds used by the solver: unbounded sides become +-U_big.
inline std::vector<ChannelBounds> effective_bounds(const QuantumModel& model, const SolverConfig& cfg) {
  const double big = cfg.unbounded_value > 0.0 ? cfg.unbounded_value : cfg.unbounded_scale * drift_spectral_scale(model);
  std::vector<ChannelBounds> out = bounds_of(model);
  for (auto& b : out) {
    if (!std::isfinite(b.lower)) b.lower = -big;
    if (!std::isfinite(b.upper)) b.upper = big;
  }
  return out;
}

/// Full solution record for a given policy (no optimization).
inline ExtremalSolution evaluate_solution(const ProblemSpec& spec, const ControlPolicy& policy) {
  require_compatible(spec.model, policy);
  const Evaluation ev = evaluate_objective(spec, policy);
  const CostateResult cs = costates_for(spec, ev);
  Trajectory traj{spec.model.basis(), policy.nodes(), ev.states, cs.costates};
  RealMatrix grad = interval_switching_integrals(spec.model, policy, ev.states, cs.costates);
  DiagnosticsTrace diag = compute_diagnostics(spec.model, policy, traj, &grad);

  ExtremalSolution sol{policy, std::move(traj), std::move(diag), std::move(grad), ev.objective, {}, {}, spec.periodic(), cs.abnormal,
                       ev.second_modulus};
  const RealVector& one = spec.model.basis()->identity();
  const RealVector on = spec.objective().coefficients() - ev.objective * one;
  auto& r = sol.residuals;
  const auto& psi = sol.trajectory.costates;
  const auto& rho = sol.trajectory.states;
  if (spec.periodic()) {
    r.transversality = (psi.front() - psi.back() + on).norm();
    r.periodicity = (rho.back() - rho.front()).norm();
  } else {
    r.transversality = (psi.back() - on).norm();
  }
  for (std::size_t m = 0; m < rho.size(); ++m) {
    r.normalization = std::max(r.normalization, std::abs(psi[m].dot(rho[m])));
    r.trace = std::max(r.trace, std::abs(one.dot(rho[m]) - 1.0));
  }
  const auto& K = sol.diagnostics.pontryagin;
  r.pontryagin_variation = sol.diagnostics.pontryagin_variation() / std::max(1.0, std::abs(K.front()));
  double dj = 0.0;
  double kmax = 0.0;
  for (int m = 0; m < policy.intervals(); ++m) {
    dj += K[static_cast<std::size_t>(m)] * policy.step(m);
    kmax = std::max(kmax, std::abs(K[static_cast<std::size_t>(m)]));
  }
  r.horizon_derivative = dj / policy.duration();
  r.free_horizon = kmax / std::max(sol.diagnostics.pontryagin_scale, std::numeric_limits<double>::min());
  sol.convergence.stationarity = feasible_ascent(policy, sol.gradient);
  sol.convergence.stationarity_scale = switching_scale(spec.model, sol.trajectory.states, sol.trajectory.costates);
  return sol;
}

// ---------------------------------------------------------------------------
// Switching-time polishing of bang-bang grid solutions.

namespace detail {

struct Switch {
  int channel = 0;
  double a = 0.0;    // value before
  double b = 0.0;    // value after
  double tau = 0.0;
  double lo = 0.0;   // admissible region
  double hi = 0.0;
  double origin = std::numeric_limits<double>::quiet_NaN();  // grid node the switch replaces, if any
};

enum class BoundSide { Lower, Upper, Interior };

inline BoundSide side_of(double u, const ChannelBounds& b) {
  const double eps = 1e-6 * std::max(b.range(), 1e-300);
  if (std::abs(u - b.upper) <= eps) return BoundSide::Upper;
  if (std::abs(u - b.lower) <= eps) return BoundSide::Lower;
  return BoundSide::Interior;
}

/// Movable nodes of a grid policy: switches between opposite bounds (at a
/// node or through a single blended interval) and junctions between a bound
/// run and an interior run. Nodes inside interior runs stay fixed.
inline void extract_switches(const ControlPolicy& p, std::vector<Switch>& out) {
  const int M = p.intervals();
  for (int k = 0; k < p.channels(); ++k) {
    const auto& b = p.bound(k);
    if (!b.finite() || !(b.range() > 0.0)) continue;
    std::vector<BoundSide> s(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) s[static_cast<std::size_t>(m)] = side_of(p.value(k, m), b);
    auto side = [&](int m) { return s[static_cast<std::size_t>(m)]; };
    auto bound_value = [&](BoundSide sd) { return sd == BoundSide::Upper ? b.upper : b.lower; };
    auto blend = [&](int m) {
      return m > 0 && m < M - 1 && side(m) == BoundSide::Interior && side(m - 1) != BoundSide::Interior &&
             side(m + 1) != BoundSide::Interior && side(m - 1) != side(m + 1);
    };
    for (int m = 0; m < M; ++m) {
      if (blend(m)) {
        const double a = bound_value(side(m - 1));
        const double bb = bound_value(side(m + 1));
        const double frac = (p.value(k, m) - bb) / (a - bb);
        out.push_back({k, a, bb, p.node(m) + frac * p.step(m), p.node(m), p.node(m + 1)});
        continue;
      }
      if (m == 0 || blend(m - 1) || blend(m + 1 < M ? m + 1 : m)) continue;
      const auto sl = side(m - 1), sm = side(m);
      const bool left_bang = sl != BoundSide::Interior, right_bang = sm != BoundSide::Interior;
      if (left_bang && right_bang && sl != sm)
        out.push_back({k, bound_value(sl), bound_value(sm), p.node(m), p.node(m - 1), p.node(m + 1), p.node(m)});
      else if (left_bang != right_bang)
        out.push_back({k, p.value(k, m - 1), p.value(k, m), p.node(m), p.node(m - 1), p.node(m + 1), p.node(m)});
    }
  }
}

inline ControlPolicy policy_with_switches(const ControlPolicy& base, const std::vector<Switch>& sw) {
  // A moved node is dropped so that no sliver interval is left behind, unless
  // another channel changes value there without moving.
  auto droppable = [&](int i) {
    const double t = base.node(i);
    bool moved = false;
    for (const auto& s : sw) moved = moved || (s.origin == t && s.tau != t);
    if (!moved) return false;
    for (int c = 0; c < base.channels(); ++c) {
      const bool own = std::any_of(sw.begin(), sw.end(), [&](const Switch& s) { return s.channel == c && s.origin == t; });
      if (!own && base.value(c, i - 1) != base.value(c, i)) return false;
    }
    return true;
  };
  std::vector<double> nodes;
  for (int i = 0; i <= base.intervals(); ++i)
    if (i == 0 || i == base.intervals() || !droppable(i)) nodes.push_back(base.node(i));
  for (const auto& s : sw) nodes.push_back(s.tau);
  std::sort(nodes.begin(), nodes.end());
  std::vector<double> merged;
  const double tol = 1e-12 * base.duration();
  for (double t : nodes)
    if (merged.empty() || t - merged.back() > tol) merged.push_back(t);
  merged.back() = base.end();
  RealMatrix v(base.channels(), static_cast<Eigen::Index>(merged.size()) - 1);
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    const double mid = 0.5 * (merged[static_cast<std::size_t>(j)] + merged[static_cast<std::size_t>(j) + 1]);
    v.col(j) = base.values_at(base.locate(mid));
    for (const auto& s : sw)
      if (mid > s.lo && mid < s.hi) v(s.channel, j) = mid < s.tau ? s.a : s.b;
  }
  return {std::move(merged), std::move(v), base.bounds()};
}

/// K_uk at the node closest to t.
inline double switching_at(const ProblemSpec& spec, const ControlPolicy& p, int k, double t) {
  const Evaluation ev = evaluate_objective(spec, p);
  const CostateResult cs = costates_for(spec, ev);
  const auto& nodes = p.nodes();
  auto it = std::min_element(nodes.begin(), nodes.end(), [&](double x, double y) { return std::abs(x - t) < std::abs(y - t); });
  const auto idx = static_cast<std::size_t>(std::distance(nodes.begin(), it));
  return switching_function(cs.costates[idx], ev.states[idx], spec.model, static_cast<std::size_t>(k));
}

}  // namespace detail

/// Replaces bound-to-bound transitions of a converged grid solution by exact
/// switching times with K_u(tau) = 0 (dJ/dtau = (a - b) K_u(tau)).
/// Returns nullopt when there is no such transition or polishing does not help.
inline std::optional<ExtremalSolution> polish_switch_times(const ProblemSpec& spec, const ExtremalSolution& sol, int sweeps = 25) {
  std::vector<detail::Switch> sw;
  detail::extract_switches(sol.policy, sw);
  if (sw.empty()) return std::nullopt;
  const ControlPolicy& base = sol.policy;
  // Keep neighbouring switches of the same channel ordered.
  auto limits = [&](std::size_t j) {
    double lo = sw[j].lo, hi = sw[j].hi;
    for (std::size_t i = 0; i < sw.size(); ++i) {
      if (i == j || sw[i].channel != sw[j].channel) continue;
      if (sw[i].tau < sw[j].tau) lo = std::max(lo, sw[i].tau);
      if (sw[i].tau > sw[j].tau) hi = std::min(hi, sw[i].tau);
    }
    return std::pair{lo, hi};
  };
  auto phi = [&](std::size_t j, double tau) {
    auto trial = sw;
    trial[j].tau = tau;
    return detail::switching_at(spec, detail::policy_with_switches(base, trial), sw[j].channel, tau);
  };
  const double scale = std::max(sol.convergence.stationarity_scale, 1e-300);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double worst = 0.0;
    for (std::size_t j = 0; j < sw.size(); ++j) {
      auto [lo, hi] = limits(j);
      const double span = hi - lo;
      if (!(span > 0.0)) continue;
      lo += 1e-9 * span;
      hi -= 1e-9 * span;
      double f0 = phi(j, sw[j].tau);
      worst = std::max(worst, std::abs(f0));
      if (std::abs(f0) <= 1e-13 * scale) continue;
      // Bracket the root of K_u inside [lo, hi], then Illinois regula falsi.
      double flo = phi(j, lo), fhi = phi(j, hi);
      if (flo * fhi > 0.0) continue;
      double a = lo, fa = flo, b = hi, fb = fhi;
      int side = 0;
      double c = sw[j].tau;
      for (int it = 0; it < 60; ++it) {
        c = (a * fb - b * fa) / (fb - fa);
        const double fc = phi(j, c);
        if (std::abs(fc) <= 1e-14 * scale || std::abs(b - a) <= 1e-15 * base.duration()) break;
        if (fc * fb > 0.0) {
          b = c;
          fb = fc;
          if (side == -1) fa *= 0.5;
          side = -1;
        } else {
          a = c;
          fa = fc;
          if (side == 1) fb *= 0.5;
          side = 1;
        }
      }
      sw[j].tau = c;
    }
    if (worst <= 1e-12 * scale) break;
  }
  ExtremalSolution out = evaluate_solution(spec, detail::policy_with_switches(base, sw));
  if (out.objective < sol.objective - 1e-12 * std::max(1.0, std::abs(sol.objective))) return std::nullopt;
  out.convergence = sol.convergence;
  out.convergence.polished = true;
  out.convergence.stationarity = feasible_ascent(out.policy, out.gradient);
  out.convergence.stationarity_scale = switching_scale(spec.model, out.trajectory.states, out.trajectory.costates);
  return out;
}

// ---------------------------------------------------------------------------
// Projected quasi-Newton ascent.

namespace detail {

/// Two-loop recursion for the inverse-Hessian estimate of f = -J applied to q.
inline RealVector lbfgs_apply(const std::deque<std::pair<RealVector, RealVector>>& mem, RealVector q) {
  std::vector<double> alpha(mem.size());
  for (std::size_t i = mem.size(); i-- > 0;) {
    const auto& [s, y] = mem[i];
    alpha[i] = s.dot(q) / y.dot(s);
    q -= alpha[i] * y;
  }
  const auto& [s_last, y_last] = mem.back();
  q *= s_last.dot(y_last) / y_last.squaredNorm();
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const auto& [s, y] = mem[i];
    const double beta = y.dot(q) / y.dot(s);
    q += (alpha[i] - beta) * s;
  }
  return q;
}

/// 1 for intervals free to move, 0 where the bound is active and the gradient pushes outward.
inline RealMatrix free_mask(const ControlPolicy& p, const RealMatrix& g) {
  RealMatrix f = RealMatrix::Ones(g.rows(), g.cols());
  for (int k = 0; k < p.channels(); ++k) {
    const auto& b = p.bound(k);
    const double eps = 1e-10 * std::max(1.0, b.range());
    for (int m = 0; m < p.intervals(); ++m) {
      const double u = p.value(k, m);
      if ((u <= b.lower + eps && g(k, m) <= 0.0) || (u >= b.upper - eps && g(k, m) >= 0.0)) f(k, m) = 0.0;
    }
  }
  return f;
}

}  // namespace detail

namespace detail {

/// Intervals on either side of the largest K jumps, empty when none exceeds the threshold.
inline std::vector<bool> junction_marks(const ProblemSpec& spec, const ExtremalSolution& sol, const SolverConfig& cfg) {
  const auto& K = sol.diagnostics.pontryagin;
  const int M = sol.policy.intervals();
  std::vector<bool> mark;
  if (M < 2 || K.size() != static_cast<std::size_t>(M) + 1) return mark;
  const double threshold = 0.25 * cfg.junction_tol * std::max(1.0, std::abs(K.front()));
  std::vector<std::pair<double, int>> jumps;  // (|dK|, node), node M stands for the periodic wrap
  for (int m = 1; m < M; ++m) jumps.emplace_back(std::abs(K[static_cast<std::size_t>(m)] - K[static_cast<std::size_t>(m) - 1]), m);
  if (spec.periodic()) jumps.emplace_back(std::abs(K.front() - K[static_cast<std::size_t>(M) - 1]), M);
  std::sort(jumps.begin(), jumps.end(), std::greater<>());
  mark.assign(static_cast<std::size_t>(M), false);
  int used = 0;
  for (const auto& [jump, node] : jumps) {
    if (jump <= threshold || used >= cfg.junction_max_nodes) break;
    mark[static_cast<std::size_t>(node - 1)] = true;
    mark[static_cast<std::size_t>(node % M)] = true;
    ++used;
  }
  if (used == 0) mark.clear();
  return mark;
}

}  // namespace detail

/// Monotone projected ascent: L-BFGS directions on the free variables with a
/// projected Barzilai-Borwein gradient step as fallback, both with Armijo
/// backtracking along the projection arc. Used by both boundary modes.
inline ExtremalSolution ascend_on_grid(const ProblemSpec& spec, const ControlPolicy& initial, const SolverConfig& cfg) {
  ControlPolicy policy = initial.with_bounds(effective_bounds(spec.model, cfg));
  ConvergenceRecord rec;
  Evaluation ev = evaluate_objective(spec, policy);
  ++rec.evaluations;
  CostateResult cs = costates_for(spec, ev);
  RealMatrix grad = interval_switching_integrals(spec.model, policy, ev.states, cs.costates);
  rec.history.push_back(ev.objective);

  if (policy.channels() == 0 || cs.abnormal) {
    ExtremalSolution s = evaluate_solution(spec, policy);
    s.convergence.history = rec.history;
    s.convergence.status = cs.abnormal ? "abnormal" : "no-controls";
    s.convergence.converged = true;
    return s;
  }

  double range = 0.0;
  for (const auto& b : policy.bounds()) range = std::max(range, b.range());
  const double gmax0 = grad.cwiseAbs().maxCoeff();
  double bb = gmax0 > 0.0 ? 0.05 * std::max(range, 1e-12) / gmax0 : 1.0;
  const double bb_min = bb * 1e-14, bb_max = bb * 1e14;
  std::deque<std::pair<RealVector, RealVector>> memory;
  // Quasi-Newton steps live in the time-weighted metric sum_m h_m du_m^2, so
  // that locally refined grids are not ill-conditioned. w = sqrt(mean h / h_m).
  RealMatrix w(grad.rows(), grad.cols());
  for (int m = 0; m < policy.intervals(); ++m) w.col(m).setConstant(std::sqrt(policy.duration() / policy.intervals() / policy.step(m)));
  const RealMatrix w2 = w.cwiseProduct(w);

  // Returns true and fills trial data when an Armijo step along `dir` exists.
  auto search = [&](const RealMatrix& dir, RealMatrix& trial_values, Evaluation& trial) {
    double a = 1.0;
    for (int bt = 0; bt < cfg.max_backtracks; ++bt, a *= cfg.backtrack) {
      trial_values = policy.project(policy.values() + a * dir);
      const double predicted = (grad.array() * (trial_values - policy.values()).array()).sum();
      if (!(predicted > 0.0)) return false;
      try {
        trial = evaluate_objective(spec, policy.with_values(trial_values));
        ++rec.evaluations;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Propagation && e.code() != ErrorCode::DegenerateSpectrum) throw;
        continue;
      }
      if (trial.objective >= ev.objective + cfg.armijo * predicted) return true;
    }
    return false;
  };

  int stalled = 0;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    rec.stationarity = feasible_ascent(policy, grad);
    rec.stationarity_scale = switching_scale(spec.model, ev.states, cs.costates);
    if (rec.stationarity <= cfg.stationarity_tol * rec.stationarity_scale) {
      rec.converged = true;
      rec.status = "converged";
      break;
    }
    const RealMatrix mask = detail::free_mask(policy, grad);
    RealMatrix trial_values;
    Evaluation trial;
    bool accepted = false;
    if (cfg.lbfgs_memory > 0 && !memory.empty()) {
      const RealMatrix gfree = grad.cwiseProduct(mask).cwiseProduct(w);
      RealVector q = Eigen::Map<const RealVector>(gfree.data(), gfree.size());
      RealVector d = detail::lbfgs_apply(memory, q);
      RealMatrix dir = Eigen::Map<RealMatrix>(d.data(), grad.rows(), grad.cols()).cwiseProduct(w).cwiseProduct(mask);
      if ((dir.array() * grad.array()).sum() > 0.0) accepted = search(dir, trial_values, trial);
      if (!accepted) memory.clear();
    }
    if (!accepted) accepted = search(bb * grad.cwiseProduct(w2), trial_values, trial);
    if (!accepted) {
      rec.status = "line-search-exhausted";
      break;
    }
    ControlPolicy next = policy.with_values(trial_values);
    const CostateResult ncs = costates_for(spec, trial);
    RealMatrix ngrad = interval_switching_integrals(spec.model, next, trial.states, ncs.costates);
    const RealMatrix s = (next.values() - policy.values()).cwiseQuotient(w);
    const RealMatrix dg = (ngrad - grad).cwiseProduct(w);
    const double sdg = (s.array() * dg.array()).sum();
    bb = sdg < 0.0 ? std::clamp(s.squaredNorm() / -sdg, bb_min, bb_max) : std::min(bb_max, 4.0 * bb);
    if (-sdg > 1e-12 * s.norm() * dg.norm()) {
      memory.emplace_back(Eigen::Map<const RealVector>(s.data(), s.size()), -Eigen::Map<const RealVector>(dg.data(), dg.size()));
      if (static_cast<int>(memory.size()) > cfg.lbfgs_memory) memory.pop_front();
    }
    const double gain = trial.objective - ev.objective;
    stalled = gain <= cfg.stall_tol * std::max(1.0, std::abs(ev.objective)) ? stalled + 1 : 0;
    policy = std::move(next);
    ev = std::move(trial);
    cs = ncs;
    grad = std::move(ngrad);
    rec.history.push_back(ev.objective);
    rec.iterations = it + 1;
    if (stalled >= cfg.stall_window) {
      rec.status = "stalled";
      break;
    }
  }
  if (rec.status.empty()) rec.status = "max-iterations";

  // Newton refinement on the free variables.
  double mu = 0.0;
  for (int it = 0; it < cfg.newton_iterations && !rec.converged; ++it) {
    rec.stationarity = feasible_ascent(policy, grad);
    rec.stationarity_scale = switching_scale(spec.model, ev.states, cs.costates);
    if (rec.stationarity <= cfg.stationarity_tol * rec.stationarity_scale) {
      rec.converged = true;
      rec.status = "converged";
      break;
    }
    const RealMatrix mask = detail::free_mask(policy, grad);
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < mask.size(); ++i)
      if (mask.data()[i] != 0.0) free.push_back(i);
    const auto nf = static_cast<Eigen::Index>(free.size());
    if (nf == 0 || nf > cfg.newton_max_variables) break;
    RealMatrix hess(nf, nf);
    for (Eigen::Index j = 0; j < nf; ++j) {
      RealMatrix v = policy.values();
      const double eps = 1e-6 * std::max(1.0, std::abs(v.data()[free[static_cast<std::size_t>(j)]]));
      v.data()[free[static_cast<std::size_t>(j)]] += eps;
      // Bounds may be crossed by eps; the gradient formula does not care.
      const ControlPolicy probe(policy.nodes(), v, std::vector<ChannelBounds>(policy.bounds().size()));
      const Evaluation pe = evaluate_objective(spec, probe);
      const RealMatrix pg = interval_switching_integrals(spec.model, probe, pe.states, costates_for(spec, pe).costates);
      for (Eigen::Index i = 0; i < nf; ++i) hess(i, j) = (pg.data()[free[static_cast<std::size_t>(i)]] - grad.data()[free[static_cast<std::size_t>(i)]]) / eps;
    }
    rec.evaluations += static_cast<int>(nf);
    hess = 0.5 * (hess + hess.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(hess);
    RealVector gf(nf);
    for (Eigen::Index i = 0; i < nf; ++i) gf(i) = grad.data()[free[static_cast<std::size_t>(i)]];
    const RealVector c = es.eigenvectors().transpose() * gf;
    if (mu <= 0.0) mu = 1e-3 * es.eigenvalues().cwiseAbs().maxCoeff();
    // Levenberg-Marquardt damping of the eigen-modified Newton step.
    RealMatrix trial_values;
    Evaluation trial;
    bool ok = false;
    for (int tries = 0; tries < 40 && !ok; ++tries) {
      RealVector coef(nf);
      for (Eigen::Index i = 0; i < nf; ++i) coef(i) = c(i) / (std::abs(es.eigenvalues()(i)) + mu);
      const RealVector df = es.eigenvectors() * coef;
      RealMatrix dir = RealMatrix::Zero(grad.rows(), grad.cols());
      for (Eigen::Index i = 0; i < nf; ++i) dir.data()[free[static_cast<std::size_t>(i)]] = df(i);
      trial_values = policy.project(policy.values() + dir);
      const double predicted = (grad.array() * (trial_values - policy.values()).array()).sum();
      if (predicted > 0.0) {
        try {
          trial = evaluate_objective(spec, policy.with_values(trial_values));
          ++rec.evaluations;
          ok = trial.objective >= ev.objective + cfg.armijo * predicted;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::Propagation && e.code() != ErrorCode::DegenerateSpectrum) throw;
        }
      }
      mu = ok ? mu / 3.0 : mu * 4.0;
    }
    if (!ok) {
      rec.status = "newton-step-rejected";
      break;
    }
    policy = policy.with_values(trial_values);
    ev = std::move(trial);
    cs = costates_for(spec, ev);
    grad = interval_switching_integrals(spec.model, policy, ev.states, cs.costates);
    rec.history.push_back(ev.objective);
    ++rec.iterations;
    rec.status = "newton";
  }

  rec.stationarity = feasible_ascent(policy, grad);
  rec.stationarity_scale = switching_scale(spec.model, ev.states, cs.costates);
  rec.converged = rec.stationarity <= cfg.stationarity_tol * rec.stationarity_scale;
  if (rec.converged) rec.status = "converged";

  ExtremalSolution sol = evaluate_solution(spec, policy);
  sol.convergence = rec;
  if (cfg.polish_switches) {
    // Moving a switch shifts the costate, so interior values elsewhere may
    // need another pass, after which the switches are polished again.
    SolverConfig again = cfg;
    again.polish_switches = false;
    for (int pass = 0; pass < 4; ++pass) {
      auto polished = polish_switch_times(spec, sol);
      if (!polished) break;
      polished->convergence.history.push_back(polished->objective);
      if (polished->convergence.stationarity <= cfg.stationarity_tol * polished->convergence.stationarity_scale) return std::move(*polished);
      ExtremalSolution re = ascend_on_grid(spec, polished->policy, again);
      if (!re.convergence.converged || re.objective < sol.objective - 1e-12 * std::max(1.0, std::abs(sol.objective))) break;
      re.convergence.polished = true;
      sol = std::move(re);
    }
  }
  return sol;
}

/// ascend_on_grid followed by local refinement around K jumps.
inline ExtremalSolution ascend(const ProblemSpec& spec, const ControlPolicy& initial, const SolverConfig& cfg) {
  ExtremalSolution sol = ascend_on_grid(spec, initial, cfg);
  for (int round = 0; round < cfg.junction_refinements && sol.convergence.converged; ++round) {
    const std::vector<bool> mark = detail::junction_marks(spec, sol, cfg);
    if (mark.empty()) break;
    ExtremalSolution next = ascend_on_grid(spec, sol.policy.refined(mark, cfg.junction_factor), cfg);
    if (!next.convergence.converged || next.objective < sol.objective - 1e-12 * std::max(1.0, std::abs(sol.objective))) break;
    sol = std::move(next);
  }
  return sol;
}

inline ExtremalSolution solve_terminal(const ProblemSpec& spec, const ControlPolicy& initial, const SolverConfig& cfg = {}) {
  if (spec.periodic()) fail(ErrorCode::Precondition, "solve_terminal needs a terminal problem");
  return ascend(spec, initial, cfg);
}

inline ExtremalSolution solve_periodic(const ProblemSpec& spec, const ControlPolicy& initial, const SolverConfig& cfg = {}) {
  if (!spec.periodic()) fail(ErrorCode::Precondition, "solve_periodic needs a periodic problem");
  return ascend(spec, initial, cfg);
}

inline ExtremalSolution solve(const ProblemSpec& spec, const ControlPolicy& initial, const SolverConfig& cfg = {}) {
  return ascend(spec, initial, cfg);
}

/// Random initial policy: uniform inside the bounds; unbounded channels are
/// sampled within +-drift spectral scale.
inline ControlPolicy random_policy(const ProblemSpec& spec, const SolverConfig& cfg, std::mt19937_64& rng) {
  const auto eff = effective_bounds(spec.model, cfg);
  const double scale = drift_spectral_scale(spec.model);
  RealMatrix v(static_cast<Eigen::Index>(eff.size()), cfg.intervals);
  for (std::size_t k = 0; k < eff.size(); ++k) {
    const auto& c = spec.model.control(k);
    const double lo = std::isfinite(c.lower) ? c.lower : std::max(eff[k].lower, -scale);
    const double hi = std::isfinite(c.upper) ? c.upper : std::min(eff[k].upper, scale);
    std::uniform_real_distribution<double> dist(lo, hi > lo ? hi : lo + 1e-300);
    for (int m = 0; m < cfg.intervals; ++m) v(static_cast<Eigen::Index>(k), m) = lo == hi ? lo : dist(rng);
  }
  ControlPolicy base = ControlPolicy::uniform(0.0, spec.horizon(), cfg.intervals, eff, RealVector::Zero(static_cast<Eigen::Index>(eff.size())));
  return base.with_values(v);
}

/// Independent solves from `cfg.starts` seeded random policies; every start is
/// reported separately.
inline std::vector<ExtremalSolution> solve_multistart(const ProblemSpec& spec, const SolverConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::vector<ExtremalSolution> out;
  for (int s = 0; s < cfg.starts; ++s) out.push_back(solve(spec, random_policy(spec, cfg, rng), cfg));
  return out;
}

inline const ExtremalSolution& best_of(const std::vector<ExtremalSolution>& runs) {
  if (runs.empty()) fail(ErrorCode::Parameter, "no runs");
  return *std::max_element(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.objective < b.objective; });
}

// ---------------------------------------------------------------------------
// Free horizon.

struct FreeHorizonResult {
  ExtremalSolution solution;
  double horizon = 0.0;
  std::vector<std::pair<double, double>> scan;  // (T, J)
  double pontryagin_residual = 0.0;              // max |K| / K scale
};

/// Golden-section search over the horizon of the inner solve, followed by a
/// secant polish on dJ/dT = <K> (zero at a free-horizon extremal).
inline FreeHorizonResult optimize_free_horizon(const ProblemSpec& spec, double t_lo, double t_hi, const SolverConfig& cfg,
                                               std::optional<ControlPolicy> initial = std::nullopt) {
  if (!spec.free_horizon()) fail(ErrorCode::Precondition, "problem does not have a free horizon");
  if (!(t_lo > 0.0) || !(t_hi > t_lo)) fail(ErrorCode::Bracket, "invalid horizon bracket");
  std::vector<std::pair<double, double>> scan;
  ControlPolicy seed = initial ? *initial
                               : ControlPolicy::uniform(0.0, t_lo, cfg.intervals, effective_bounds(spec.model, cfg),
                                                        RealVector::Zero(static_cast<Eigen::Index>(spec.model.channel_count())));
  // Warm starts go back onto the uniform grid so local refinement does not accumulate.
  auto inner = [&](double t, const ControlPolicy& warm) {
    std::vector<double> nodes(static_cast<std::size_t>(cfg.intervals) + 1);
    for (int m = 0; m <= cfg.intervals; ++m) nodes[static_cast<std::size_t>(m)] = t * m / cfg.intervals;
    return solve(spec.with_horizon(t), warm.resampled(nodes), cfg);
  };

  // Every inner solve is warm-started from the best solution seen so far, so
  // the search stays on one branch of local optima.
  ControlPolicy best_policy = seed;
  double best_j = -std::numeric_limits<double>::infinity();
  std::optional<ExtremalSolution> best_sol;
  double best_t = t_lo;
  auto run = [&](double t) {
    ExtremalSolution s = inner(t, best_policy);
    scan.emplace_back(t, s.objective);
    if (s.objective > best_j) {
      best_j = s.objective;
      best_policy = s.policy;
      best_sol = s;
      best_t = t;
    }
    return s.objective;
  };

  const int n = std::max(cfg.scan_points, 3);
  std::vector<double> ts, js;
  for (int i = 0; i < n; ++i) {
    ts.push_back(t_lo + (t_hi - t_lo) * i / (n - 1));
    js.push_back(run(ts.back()));
  }
  const auto ib = static_cast<int>(std::distance(js.begin(), std::max_element(js.begin(), js.end())));
  const auto [jmin_it, jmax_it] = std::minmax_element(js.begin(), js.end());
  const double flat_tol = 1e-10 * std::max(1.0, std::abs(*jmax_it));
  if (*jmax_it - *jmin_it <= flat_tol || ib == 0 || ib == n - 1)
    fail(ErrorCode::Bracket, "no interior optimum in [" + std::to_string(t_lo) + ", " + std::to_string(t_hi) + "]: J(T_lo) = " +
                                 std::to_string(js.front()) + ", J(T_hi) = " + std::to_string(js.back()) +
                                 (*jmax_it - *jmin_it <= flat_tol ? " (flat)" : ""));

  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = ts[static_cast<std::size_t>(ib) - 1], b = ts[static_cast<std::size_t>(ib) + 1];
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double j1 = run(x1), j2 = run(x2);
  // Coarse localization only; the secant below converges superlinearly.
  for (int it = 0; it < cfg.horizon_max_iterations && (b - a) > 1e-3 * best_t; ++it) {
    if (j1 >= j2) {
      b = x2;
      x2 = x1;
      j2 = j1;
      x1 = b - gr * (b - a);
      j1 = run(x1);
    } else {
      a = x1;
      x1 = x2;
      j1 = j2;
      x2 = a + gr * (b - a);
      j2 = run(x2);
    }
  }
  // Secant on dJ/dT = sum K_m h_m / T.
  double t0 = best_t, d0 = best_sol->residuals.horizon_derivative;
  double t1 = best_t * (1.0 + 1e-4);
  ExtremalSolution cur = inner(t1, best_policy);
  double d1 = cur.residuals.horizon_derivative;
  for (int it = 0; it < 40 && d1 != d0; ++it) {
    const double t2 = std::clamp(t1 - d1 * (t1 - t0) / (d1 - d0), a, b);
    cur = inner(t2, best_policy);
    scan.emplace_back(t2, cur.objective);
    t0 = t1;
    d0 = d1;
    t1 = t2;
    d1 = cur.residuals.horizon_derivative;
    if (cur.objective > best_j) {
      best_j = cur.objective;
      best_sol = cur;
      best_t = t2;
    }
    if (std::abs(t1 - t0) <= cfg.horizon_rel_tol * t1 || cur.residuals.free_horizon <= 1e-9) break;
  }
  const double residual = best_sol->residuals.free_horizon;
  return {std::move(*best_sol), best_t, std::move(scan), residual};
}

// ---------------------------------------------------------------------------
// Consistency of a periodic extremal with the terminal problems over n periods.

struct PeriodMultipleReport {
  int periods = 2;
  double violation = 0.0;           // max feasible-ascent |K_u| of the nT terminal problem
  double relative_violation = 0.0;  // violation / max |K_u|
  double periodic_stationarity = 0.0;
  bool improvable = false;
  double second_eigen_modulus = 0.0;
  std::vector<double> costate_norms;  // | <O_n| P^n |, n = 1..
  double costate_decay_rate = 0.0;    // geometric-mean ratio of successive norms
};

inline PeriodMultipleReport period_multiple_check(const ProblemSpec& periodic_spec, const ExtremalSolution& sol, int periods,
                                                  int decay_terms = 12) {
  if (periods < 2) fail(ErrorCode::Parameter, "period multiple must be >= 2, got " + std::to_string(periods));
  if (!periodic_spec.periodic() || !sol.periodic) fail(ErrorCode::Precondition, "needs a periodic solution");
  PeriodMultipleReport rep;
  rep.periods = periods;
  const ControlPolicy repeated = sol.policy.repeated(periods);
  ProblemSpec terminal(periodic_spec.model,
                       TerminalMode{LiouvilleVector(periodic_spec.model.basis(), sol.trajectory.states.front()), repeated.duration(), false});
  const RealMatrix g = adjoint_gradient(terminal, repeated);
  double scale = 0.0;
  rep.violation = feasible_ascent(repeated, g, &scale);
  rep.relative_violation = scale > 0.0 ? rep.violation / scale : 0.0;
  rep.periodic_stationarity = sol.pmp_violation();
  rep.improvable = rep.violation > std::max(10.0 * rep.periodic_stationarity, 1e-12 * std::max(scale, 1.0));

  const auto steps = step_propagators(periodic_spec.model, sol.policy);
  const RealMatrix p = horizon_propagator(steps);
  const auto moduli = propagator_moduli(p);
  rep.second_eigen_modulus = moduli.size() > 1 ? moduli[1] : 0.0;
  const RealVector& one = periodic_spec.model.basis()->identity();
  const RealVector& o = periodic_spec.objective().coefficients();
  RealVector row = o - o.dot(sol.trajectory.states.front()) * one;
  for (int n = 1; n <= decay_terms; ++n) {
    row = p.transpose() * row;
    rep.costate_norms.push_back(row.norm());
  }
  if (rep.costate_norms.size() >= 4) {
    const std::size_t h = rep.costate_norms.size() / 2;
    const double first = rep.costate_norms[h], last = rep.costate_norms.back();
    if (first > 0.0 && last > 0.0) rep.costate_decay_rate = std::pow(last / first, 1.0 / static_cast<double>(rep.costate_norms.size() - 1 - h));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Near-delta features of channels with (effectively) unbounded controls.

struct Spike {
  int first_interval = 0;
  int last_interval = 0;  // inclusive
  double start = 0.0;
  double end = 0.0;
  double area = 0.0;      // \int (u - baseline) dt over the feature
  double peak = 0.0;
  bool saturated = false;  // reaches a control bound somewhere
};

/// Near-delta features of channel k: runs of intervals with |u - median| above
/// `threshold`, merged across gaps of at most `merge_gap` intervals and widened
/// while the excursion keeps falling. The area is measured against the straight
/// line joining the values just outside the feature. With `periodic` set the
/// grid wraps around.
inline std::vector<Spike> detect_spikes(const ControlPolicy& p, int k, double threshold, bool periodic, int merge_gap = 3) {
  const int M = p.intervals();
  std::vector<double> v(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) v[static_cast<std::size_t>(m)] = p.value(k, m);
  std::vector<double> sorted = v;
  std::nth_element(sorted.begin(), sorted.begin() + M / 2, sorted.end());
  const double median = sorted[static_cast<std::size_t>(M / 2)];
  auto wrap = [&](int j) { return ((j % M) + M) % M; };
  auto ex = [&](int j) { return std::abs(v[static_cast<std::size_t>(wrap(j))] - median); };
  auto hot = [&](int j) { return ex(j) > threshold; };
  std::vector<Spike> out;
  int origin = 0;
  if (periodic) {
    // Start from a cold interval so that a feature straddling t = 0 stays whole.
    while (origin < M && hot(origin)) ++origin;
    if (origin == M) return out;
  }
  const int last = periodic ? origin + M : M;
  int j = origin;
  while (j < last) {
    if (!hot(j)) {
      ++j;
      continue;
    }
    int lo = j, hi = j;
    for (int q = j + 1; q < last && q - hi <= merge_gap + 1; ++q)
      if (hot(q)) hi = q;
    j = hi + 1;
    const int lo_limit = periodic ? hi - M + 1 : 0;
    const int hi_limit = periodic ? lo + M - 1 : M - 1;
    while (lo - 1 >= lo_limit && ex(lo - 1) < ex(lo) && ex(lo - 1) > 1e-3 * threshold) --lo;
    while (hi + 1 <= hi_limit && ex(hi + 1) < ex(hi) && ex(hi + 1) > 1e-3 * threshold) ++hi;
    if (!periodic) j = std::max(j, hi + 1);
    const bool has_left = periodic || lo > 0, has_right = periodic || hi < M - 1;
    const double ul = has_left ? v[static_cast<std::size_t>(wrap(lo - 1))] : (has_right ? v[static_cast<std::size_t>(wrap(hi + 1))] : median);
    const double ur = has_right ? v[static_cast<std::size_t>(wrap(hi + 1))] : ul;
    Spike sp;
    sp.first_interval = wrap(lo);
    sp.last_interval = wrap(hi);
    sp.start = p.node(wrap(lo));
    sp.end = p.node(wrap(hi) + 1);
    double width = 0.0;
    for (int q = lo; q <= hi; ++q) width += p.step(wrap(q));
    double t = 0.0;
    for (int q = lo; q <= hi; ++q) {
      const int w = wrap(q);
      const double mid = (t + 0.5 * p.step(w)) / width;
      const double base = ul + (ur - ul) * mid;
      sp.area += (v[static_cast<std::size_t>(w)] - base) * p.step(w);
      if (std::abs(v[static_cast<std::size_t>(w)] - base) > std::abs(sp.peak)) sp.peak = v[static_cast<std::size_t>(w)] - base;
      const auto& b = p.bound(k);
      if (b.finite() && (std::abs(v[static_cast<std::size_t>(w)] - b.upper) <= 1e-6 * b.range() ||
                         std::abs(v[static_cast<std::size_t>(w)] - b.lower) <= 1e-6 * b.range()))
        sp.saturated = true;
      t += p.step(w);
    }
    out.push_back(sp);
    if (periodic && j >= last) break;
  }
  return out;
}

/// Refines the grid by `factor` on every spike interval (plus `pad` neighbours).
inline ControlPolicy refine_around_spikes(const ControlPolicy& p, const std::vector<Spike>& spikes, int factor, int pad = 2) {
  const int M = p.intervals();
  std::vector<bool> mark(static_cast<std::size_t>(M), false);
  for (const auto& s : spikes) {
    int len = s.last_interval - s.first_interval;
    if (len < 0) len += M;
    for (int j = -pad; j <= len + pad; ++j) mark[static_cast<std::size_t>(((s.first_interval + j) % M + M) % M)] = true;
  }
  return p.refined(mark, factor);
}

}  // namespace qpmp
