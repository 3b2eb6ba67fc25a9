#pragma once

// Reservoir-engineering controls: collision channels L_k rho = rho_k - rho.
// Brute-force bang-bang oracle, bang-bang verification for all-collision
// problems, the no-singular-subarc check for mixed problems, and the
// "dissipate, then drive" protocol report.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qpmp/arc_classifier.hpp"
#include "qpmp/core.hpp"
#include "qpmp/dynamics.hpp"
#include "qpmp/extremal_solver.hpp"
#include "qpmp/linalg.hpp"

namespace qpmp {

/// Per channel: switching times in (t0, tf) and the value on each leg.
struct ChannelSwitches {
  std::vector<double> times;
  std::vector<double> legs;  // times.size() + 1 values
};

struct SwitchSequence {
  std::vector<ChannelSwitches> channels;

  /// Piecewise-constant policy on the union of the switching times.
  ControlPolicy to_policy(double start, double end, const std::vector<ChannelBounds>& bounds) const {
    std::vector<double> nodes{start, end};
    for (const auto& c : channels) nodes.insert(nodes.end(), c.times.begin(), c.times.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    RealMatrix v(static_cast<Eigen::Index>(channels.size()), static_cast<Eigen::Index>(nodes.size()) - 1);
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      const double mid = 0.5 * (nodes[static_cast<std::size_t>(j)] + nodes[static_cast<std::size_t>(j) + 1]);
      for (std::size_t k = 0; k < channels.size(); ++k) {
        const auto& c = channels[k];
        const auto leg = std::distance(c.times.begin(), std::upper_bound(c.times.begin(), c.times.end(), mid));
        v(static_cast<Eigen::Index>(k), j) = c.legs[static_cast<std::size_t>(leg)];
      }
    }
    return {std::move(nodes), std::move(v), bounds};
  }
};

struct BangBangOracle {
  SwitchSequence best;
  double objective = -std::numeric_limits<double>::infinity();
  long long candidates = 0;
  std::vector<double> table;  // J per candidate in enumeration order, when requested
};

struct OracleOptions {
  int max_switches = 2;       // per channel
  int grid_points = 32;       // switch times live on the G - 1 interior nodes of a uniform G-cell grid
  long long cap = 1000000;
  bool keep_table = false;
};

namespace detail {

inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Lexicographic list of increasing index tuples of size <= s from {1..n}.
inline void subsets(int n, int s, std::vector<std::vector<int>>& out) {
  out.push_back({});
  std::vector<int> cur;
  auto rec = [&](auto&& self, int from) -> void {
    for (int i = from; i <= n; ++i) {
      cur.push_back(i);
      out.push_back(cur);
      if (static_cast<int>(cur.size()) < s) self(self, i + 1);
      cur.pop_back();
    }
  };
  if (s > 0) rec(rec, 1);
}

}  // namespace detail

/// Exhaustive search over bang-bang policies with at most `max_switches`
/// switches per channel placed on grid nodes. Ties keep the first candidate
/// in enumeration order (start leg lower before upper, then switch tuples
/// lexicographically, channel 0 slowest).
inline BangBangOracle brute_force_bangbang(const ProblemSpec& spec, const OracleOptions& opt = {}) {
  if (spec.periodic()) fail(ErrorCode::Precondition, "the bang-bang oracle handles terminal problems only");
  const auto K = static_cast<int>(spec.model.channel_count());
  const int G = opt.grid_points;
  if (G < 1 || opt.max_switches < 0) fail(ErrorCode::Parameter, "grid_points >= 1 and max_switches >= 0 required");
  for (int k = 0; k < K; ++k)
    if (!spec.model.control(static_cast<std::size_t>(k)).bounded())
      fail(ErrorCode::Precondition, "bang-bang oracle needs finite bounds on every channel");
  long long per_channel = 0;
  for (int s = 0; s <= opt.max_switches; ++s) per_channel += detail::binomial(G - 1, s);
  per_channel *= 2;
  long long total = 1;
  for (int k = 0; k < K; ++k) {
    total *= per_channel;
    if (total > opt.cap) fail(ErrorCode::EnumerationSize, "bang-bang enumeration needs " + std::to_string(total) + "+ candidates (cap " + std::to_string(opt.cap) + ")");
  }
  std::vector<std::vector<int>> subs;
  detail::subsets(G - 1, opt.max_switches, subs);

  // Cell propagators for every corner of the control box, and their powers.
  const double h = spec.horizon() / G;
  const int corners = 1 << K;
  std::vector<std::vector<RealMatrix>> powers(static_cast<std::size_t>(corners));
  for (int c = 0; c < corners; ++c) {
    RealVector u(K);
    for (int k = 0; k < K; ++k) {
      const auto& ch = spec.model.control(static_cast<std::size_t>(k));
      u(k) = (c >> k) & 1 ? ch.upper : ch.lower;
    }
    const RealMatrix e = linalg::expm(h * spec.model.generator(u));
    auto& pw = powers[static_cast<std::size_t>(c)];
    pw.push_back(RealMatrix::Identity(e.rows(), e.cols()));
    for (int n = 1; n <= G; ++n) pw.push_back(e * pw.back());
  }
  const RealVector rho0 = spec.initial_state().coefficients();
  const RealVector& o = spec.objective().coefficients();

  BangBangOracle out;
  out.candidates = total;
  if (opt.keep_table) out.table.reserve(static_cast<std::size_t>(total));
  const auto options = static_cast<long long>(subs.size()) * 2;
  std::vector<long long> digit(static_cast<std::size_t>(K), 0);
  std::vector<int> breaks;
  for (long long cand = 0; cand < total; ++cand) {
    long long rem = cand;
    for (int k = K - 1; k >= 0; --k) {
      digit[static_cast<std::size_t>(k)] = rem % options;
      rem /= options;
    }
    breaks.assign({0, G});
    for (int k = 0; k < K; ++k) {
      const auto& sw = subs[static_cast<std::size_t>(digit[static_cast<std::size_t>(k)] % static_cast<long long>(subs.size()))];
      breaks.insert(breaks.end(), sw.begin(), sw.end());
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    RealVector rho = rho0;
    for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
      int corner = 0;
      for (int k = 0; k < K; ++k) {
        const auto d = digit[static_cast<std::size_t>(k)];
        const auto& sw = subs[static_cast<std::size_t>(d % static_cast<long long>(subs.size()))];
        const int start_upper = static_cast<int>(d / static_cast<long long>(subs.size()));
        const auto passed = std::upper_bound(sw.begin(), sw.end(), breaks[b]) - sw.begin();
        if ((start_upper + passed) % 2) corner |= 1 << k;
      }
      rho = powers[static_cast<std::size_t>(corner)][static_cast<std::size_t>(breaks[b + 1] - breaks[b])] * rho;
    }
    const double j = o.dot(rho);
    if (opt.keep_table) out.table.push_back(j);
    if (j > out.objective) {
      out.objective = j;
      out.best.channels.clear();
      for (int k = 0; k < K; ++k) {
        const auto d = digit[static_cast<std::size_t>(k)];
        const auto& sw = subs[static_cast<std::size_t>(d % static_cast<long long>(subs.size()))];
        const bool start_upper = d / static_cast<long long>(subs.size()) == 1;
        const auto& ch = spec.model.control(static_cast<std::size_t>(k));
        ChannelSwitches cs;
        for (std::size_t i = 0; i <= sw.size(); ++i) cs.legs.push_back((start_upper + i) % 2 ? ch.upper : ch.lower);
        for (int idx : sw) cs.times.push_back(idx * h);
        out.best.channels.push_back(std::move(cs));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Theorem checks.

/// Values <psi| L_c^n |rho_k>, n = 0..n_max, with L_c the generator without channel k.
inline std::vector<double> collision_chain(const QuantumModel& model, const RealVector& psi, std::size_t k, const RealVector& u, int n_max = 5) {
  const auto& ch = model.control(k);
  if (ch.kind != ChannelKind::Collision) fail(ErrorCode::Precondition, "channel '" + ch.name + "' is not a collision channel");
  const RealMatrix lc = frozen_remainder(model, k, u);
  RealVector v = ch.collision_target->coefficients();
  std::vector<double> out;
  for (int n = 0; n <= n_max; ++n) {
    out.push_back(psi.dot(v));
    v = lc * v;
  }
  return out;
}

/// Smallest rank of span{ L_c^n rho_k } over the corners and the midpoint
/// of the box of the other channels (L_c is affine in their values).
inline Eigen::Index collision_krylov_rank(const QuantumModel& model, std::size_t k, double rel_tol = 1e-10) {
  const auto K = model.channel_count();
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < K; ++j)
    if (j != k) others.push_back(j);
  auto rank_at = [&](const RealVector& u) {
    const RealMatrix lc = frozen_remainder(model, k, u);
    const Eigen::Index n = lc.rows();
    RealMatrix kry(n, n);
    RealVector v = model.control(k).collision_target->coefficients();
    for (Eigen::Index i = 0; i < n; ++i) {
      kry.col(i) = v / std::max(v.norm(), 1e-300);
      v = lc * kry.col(i);
    }
    return linalg::numerical_rank(kry, rel_tol);
  };
  auto value = [&](std::size_t j, int which) {
    const auto& c = model.control(j);
    if (!c.bounded()) return 0.0;
    return which == 0 ? c.lower : which == 1 ? c.upper : 0.5 * (c.lower + c.upper);
  };
  RealVector u = RealVector::Zero(static_cast<Eigen::Index>(K));
  for (std::size_t j : others) u(static_cast<Eigen::Index>(j)) = value(j, 2);
  Eigen::Index best = rank_at(u);
  if (others.size() < 16)
    for (unsigned long mask = 0; mask < (1UL << others.size()); ++mask) {
      for (std::size_t i = 0; i < others.size(); ++i) u(static_cast<Eigen::Index>(others[i])) = value(others[i], (mask >> i) & 1UL ? 1 : 0);
      best = std::min(best, rank_at(u));
    }
  return best;
}

inline double fraction_at_bounds(const ControlPolicy& p, double rel_tol = 1e-6, int channel = -1) {
  long total = 0, at = 0;
  for (int k = 0; k < p.channels(); ++k) {
    if (channel >= 0 && k != channel) continue;
    const auto& b = p.bound(k);
    const double eps = rel_tol * std::max(b.range(), 1e-300);
    for (int m = 0; m < p.intervals(); ++m) {
      ++total;
      if (std::abs(p.value(k, m) - b.lower) <= eps || std::abs(p.value(k, m) - b.upper) <= eps) ++at;
    }
  }
  return total ? static_cast<double>(at) / static_cast<double>(total) : 1.0;
}

struct StartSummary {
  double objective = 0.0;
  double bang_fraction = 0.0;
  bool converged = false;
  bool matches_oracle = false;
  std::string status;
};

struct Theorem3Report {
  Verdict verdict = Verdict::NotApplicable;
  std::string reason;
  std::vector<StartSummary> starts;
  double oracle_objective = 0.0;
  double best_objective = 0.0;
  std::vector<Eigen::Index> krylov_ranks;  // per channel
  Eigen::Index full_rank = 0;
  double switching_peak = 0.0;  // max |K_u| / switching scale over starts
};

/// All-collision problems: converged policies should sit at bounds (>= 99% of
/// intervals) and the best start should reach the grid oracle within 1e-4.
inline Theorem3Report verify_theorem3(const ProblemSpec& spec, const SolverConfig& cfg, const OracleOptions& oracle = {},
                                      double bang_fraction = 0.99, double match_tol = 1e-4) {
  for (const auto& c : spec.model.controls())
    if (c.kind != ChannelKind::Collision) fail(ErrorCode::Precondition, "channel '" + c.name + "' is not of collision type");
  Theorem3Report rep;
  rep.full_rank = static_cast<Eigen::Index>(spec.model.basis()->size());
  for (std::size_t k = 0; k < spec.model.channel_count(); ++k) rep.krylov_ranks.push_back(collision_krylov_rank(spec.model, k));
  for (std::size_t k = 0; k < rep.krylov_ranks.size(); ++k)
    if (rep.krylov_ranks[k] < rep.full_rank) {
      rep.verdict = Verdict::NotApplicable;
      rep.reason = "channel " + std::to_string(k + 1) + " Krylov span has rank " + std::to_string(rep.krylov_ranks[k]) + " < " +
                   std::to_string(rep.full_rank) + " (invariant subspace; switching functions may vanish identically)";
      return rep;
    }
  const auto runs = solve_multistart(spec, cfg);
  const BangBangOracle orc = brute_force_bangbang(spec, oracle);
  rep.oracle_objective = orc.objective;
  rep.best_objective = best_of(runs).objective;
  bool all_bang = true, any_converged = false;
  for (const auto& r : runs) {
    StartSummary s;
    s.objective = r.objective;
    s.bang_fraction = fraction_at_bounds(r.policy);
    s.converged = r.convergence.converged;
    s.status = r.convergence.status;
    s.matches_oracle = r.objective >= orc.objective - match_tol * std::abs(orc.objective);
    double peak = 0.0;
    for (std::size_t k = 0; k < r.diagnostics.switching.size(); ++k) peak = std::max(peak, r.diagnostics.max_abs_switching(k));
    const double sc = switching_scale(spec.model, r.trajectory.states, r.trajectory.costates);
    rep.switching_peak = std::max(rep.switching_peak, sc > 0.0 ? peak / sc : 0.0);
    if (s.converged) {
      any_converged = true;
      all_bang = all_bang && s.bang_fraction >= bang_fraction;
    }
    rep.starts.push_back(s);
  }
  if (rep.switching_peak <= 1e-10) {
    rep.verdict = Verdict::NotApplicable;
    rep.reason = "switching functions vanish identically";
    return rep;
  }
  const bool matched = rep.best_objective >= orc.objective - match_tol * std::abs(orc.objective);
  if (!any_converged) {
    rep.verdict = Verdict::Fail;
    rep.reason = "no start converged";
  } else if (all_bang && matched) {
    rep.verdict = Verdict::Pass;
    rep.reason = "converged policies bang-bang; best start matches the oracle";
  } else {
    rep.verdict = Verdict::Fail;
    rep.reason = std::string(all_bang ? "" : "a converged policy is not bang-bang; ") + (matched ? "" : "oracle not reached");
  }
  return rep;
}

struct Theorem4Report {
  Verdict verdict = Verdict::NotApplicable;
  std::string reason;
  double objective = 0.0;
  double bang_fraction = 0.0;           // collision channel
  std::vector<int> singular_intervals;  // collision channel
  std::vector<int> ambiguous_intervals;
  int perturbations = 0;
  double max_objective_change = 0.0;
  std::vector<double> chain;            // <psi|L_c^n|rho_k> at the first singular interval, n = 0..5
};

/// Mixed problems: the collision channel `k` has no singular subarc unless
/// the objective is invariant under perturbations supported on it.
inline Theorem4Report verify_theorem4(const ProblemSpec& spec, std::size_t k, const SolverConfig& cfg, int perturbations = 20,
                                      double invariance_tol = 1e-8, const ClassifierTolerances& tol = {}) {
  if (k >= spec.model.channel_count() || spec.model.control(k).kind != ChannelKind::Collision)
    fail(ErrorCode::Precondition, "channel " + std::to_string(k + 1) + " is not of collision type");
  Theorem4Report rep;
  const auto runs = solve_multistart(spec, cfg);
  const ExtremalSolution& sol = best_of(runs);
  rep.objective = sol.objective;
  rep.bang_fraction = fraction_at_bounds(sol.policy, tol.control, static_cast<int>(k));
  const ArcSegmentation seg = classify_arcs(spec.model, sol, tol);
  const auto M = sol.policy.intervals();
  for (int m = 0; m < M; ++m) {
    const ArcLabel l = seg.labels[k][static_cast<std::size_t>(m)];
    if (l == ArcLabel::Singular) rep.singular_intervals.push_back(m);
    if (l == ArcLabel::Ambiguous) rep.ambiguous_intervals.push_back(m);
  }
  if (!rep.singular_intervals.empty()) {
    const int m0 = rep.singular_intervals.front();
    rep.chain = collision_chain(spec.model, sol.trajectory.costates[static_cast<std::size_t>(m0)], k, sol.policy.values_at(m0));
    std::mt19937_64 rng(cfg.seed);
    const auto& b = sol.policy.bound(static_cast<int>(k));
    std::uniform_real_distribution<double> dist(-0.25, 0.25);
    for (int i = 0; i < perturbations; ++i) {
      RealMatrix v = sol.policy.values();
      for (int m : rep.singular_intervals) v(static_cast<Eigen::Index>(k), m) = b.clamp(v(static_cast<Eigen::Index>(k), m) + dist(rng) * b.range());
      const double j = objective_value(spec, sol.policy.with_values(v));
      rep.max_objective_change = std::max(rep.max_objective_change, std::abs(j - sol.objective));
      ++rep.perturbations;
    }
  }
  // Transition intervals inside the segmentation are corners, not ambiguity.
  std::vector<int> real_ambiguous;
  for (int idx : seg.ambiguous_intervals)
    if (idx / M == static_cast<int>(k)) real_ambiguous.push_back(idx % M);
  rep.ambiguous_intervals = real_ambiguous;
  if (!rep.singular_intervals.empty() && rep.max_objective_change >= invariance_tol) {
    rep.verdict = Verdict::Fail;
    rep.reason = "singular subarc of the collision channel changes J under perturbation";
  } else if (!rep.ambiguous_intervals.empty()) {
    rep.verdict = Verdict::Fail;
    rep.reason = std::to_string(rep.ambiguous_intervals.size()) + " collision-channel intervals are neither regular nor singular";
  } else {
    rep.verdict = Verdict::Pass;
    rep.reason = rep.singular_intervals.empty() ? "collision channel bang-bang" : "singular support is J-invariant (redundant control)";
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Dissipation-then-drive protocol.

struct CcProtocolReport {
  std::string structure;        // two-phase | dissipation-only | coherent-only | other
  double dissipation_off_at = 0.0;  // end of the initial dissipative phase
  double coherent_on_at = 0.0;      // first time a coherent channel is active
  double objective = 0.0;
  std::string description;
};

inline CcProtocolReport cc_protocol_demo(const ProblemSpec& spec, const SolverConfig& cfg, double active_tol = 1e-6) {
  const auto runs = solve_multistart(spec, cfg);
  const ExtremalSolution& sol = best_of(runs);
  const ControlPolicy& p = sol.policy;
  CcProtocolReport rep;
  rep.objective = sol.objective;
  const int M = p.intervals();
  // Time-weighted activity of dissipative and coherent channels.
  auto dissipating = [&](int m) {
    for (int k = 0; k < p.channels(); ++k)
      if (spec.model.control(static_cast<std::size_t>(k)).kind == ChannelKind::Collision && p.value(k, m) > p.bound(k).lower + active_tol * std::max(p.bound(k).range(), 1e-300))
        return true;
    return false;
  };
  auto driving = [&](int m) {
    for (int k = 0; k < p.channels(); ++k)
      if (spec.model.control(static_cast<std::size_t>(k)).kind == ChannelKind::Coherent && std::abs(p.value(k, m)) > active_tol * std::max(p.bound(k).range(), 1e-300))
        return true;
    return false;
  };
  double t_diss = 0.0, t_drive = 0.0;
  int last_diss = -1, first_drive = M;
  for (int m = 0; m < M; ++m) {
    if (dissipating(m)) {
      t_diss += p.step(m);
      last_diss = m;
    }
    if (driving(m)) {
      t_drive += p.step(m);
      first_drive = std::min(first_drive, m);
    }
  }
  const double T = p.duration();
  int first_off = 0;
  while (first_off < M && dissipating(first_off)) ++first_off;
  rep.dissipation_off_at = p.node(first_off);
  rep.coherent_on_at = first_drive < M ? p.node(first_drive) : p.end();
  const bool diss_prefix = last_diss < first_off;  // dissipation only in an initial block
  if (t_diss >= 0.99 * T && t_drive <= 0.01 * T) {
    rep.structure = "dissipation-only";
  } else if (t_diss <= 0.01 * T) {
    rep.structure = t_drive > 0.0 ? "coherent-only" : "idle";
  } else if (diss_prefix && first_off > 0 && first_off < M && t_drive > 0.0) {
    bool drive_after = false;
    for (int m = first_off; m < M; ++m) drive_after = drive_after || driving(m);
    rep.structure = drive_after ? "two-phase" : "other";
  } else {
    rep.structure = "other";
  }
  rep.description = "dissipation active " + std::to_string(t_diss / T * 100.0) + "% of T, coherent drive active " +
                    std::to_string(t_drive / T * 100.0) + "% of T";
  return rep;
}

}  // namespace qpmp
