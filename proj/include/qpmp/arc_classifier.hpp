#pragma once

// Post-hoc structure analysis of grid extremals: regular/singular arcs,
// junctions and branch points, corner (sewing) residuals, a finite-difference
// smoothness probe and the parameter/constraint count of the arc structure.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "qpmp/core.hpp"
#include "qpmp/dynamics.hpp"
#include "qpmp/extremal_solver.hpp"
#include "qpmp/linalg.hpp"

namespace qpmp {

enum class ArcLabel { RegularMax, RegularMin, Singular, Ambiguous };
enum class JunctionType { Corner, RegularToSingular, SingularToRegular, SingularToSingular, Ambiguous };

inline const char* to_string(ArcLabel l) {
  switch (l) {
    case ArcLabel::RegularMax: return "regular-max";
    case ArcLabel::RegularMin: return "regular-min";
    case ArcLabel::Singular: return "singular";
    case ArcLabel::Ambiguous: return "ambiguous";
  }
  return "?";
}

inline const char* to_string(JunctionType j) {
  switch (j) {
    case JunctionType::Corner: return "corner";
    case JunctionType::RegularToSingular: return "regular-singular";
    case JunctionType::SingularToRegular: return "singular-regular";
    case JunctionType::SingularToSingular: return "singular-singular";
    case JunctionType::Ambiguous: return "ambiguous";
  }
  return "?";
}

inline bool is_regular(ArcLabel l) { return l == ArcLabel::RegularMax || l == ArcLabel::RegularMin; }

struct ClassifierTolerances {
  double control = 1e-6;     // |u - bound| < control * (u_max - u_min)
  double switching = 1e-5;   // |K_u| < switching * max |K_u|
  int min_singular_run = 3;
  int max_transition = 2;    // intermediate runs between opposite bounds treated as a corner
  double branch = 1e-6;      // relative zero test for the ad-power conditions
  double vanishing = 1e-9;   // |K_u| below this times the switching scale counts as zero
};

struct ArcSegment {
  int channel = 0;
  ArcLabel label = ArcLabel::Ambiguous;
  double start = 0.0;
  double end = 0.0;
  int first_interval = 0;
  int last_interval = 0;  // inclusive
};

struct Junction {
  int channel = 0;
  JunctionType type = JunctionType::Corner;
  double time = 0.0;
  int node = 0;              // grid node nearest to the junction
  int left_interval = 0;     // last interval of the left segment
  int right_interval = 0;    // first interval of the right segment
  int branch_order = 0;      // 0: not a branch point; 3 means ">= 3"
};

struct ArcSegmentation {
  std::vector<ArcSegment> segments;  // grouped by channel, time-ordered within a channel
  std::vector<Junction> junctions;
  std::vector<std::vector<ArcLabel>> labels;  // [channel][interval]
  std::vector<int> ambiguous_intervals;       // channel * M + m
  bool ambiguous() const { return !ambiguous_intervals.empty(); }

  std::vector<ArcSegment> segments_of(int k) const {
    std::vector<ArcSegment> out;
    for (const auto& s : segments)
      if (s.channel == k) out.push_back(s);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Branch-point order.

/// Coefficients (in alpha) of <psi| ad^m_{L0 + alpha L1} [L1, L0] |rho>, m = 1..max_order.
/// ad_L X = L X - X L. Entry [m-1][l] is the alpha^l coefficient.
inline std::vector<std::vector<double>> ad_power_coefficients(const RealVector& psi, const RealVector& rho, const RealMatrix& l0,
                                                              const RealMatrix& l1, int max_order, std::vector<std::vector<double>>* scales = nullptr) {
  std::vector<RealMatrix> poly{linalg::commutator(l1, l0)};
  std::vector<std::vector<double>> out, sc;
  for (int m = 1; m <= max_order; ++m) {
    std::vector<RealMatrix> next(poly.size() + 1, RealMatrix::Zero(l0.rows(), l0.cols()));
    for (std::size_t j = 0; j < poly.size(); ++j) {
      next[j] += linalg::commutator(l0, poly[j]);
      next[j + 1] += linalg::commutator(l1, poly[j]);
    }
    poly = std::move(next);
    std::vector<double> row, srow;
    for (const auto& p : poly) {
      row.push_back(psi.dot(p * rho));
      srow.push_back(psi.norm() * p.norm() * rho.norm());
    }
    out.push_back(std::move(row));
    sc.push_back(std::move(srow));
  }
  if (scales) *scales = std::move(sc);
  return out;
}

/// Largest s <= 3 such that all ad-power conditions with m <= s hold at (psi, rho);
/// 0 when the point is not a branch point. 3 stands for ">= 3".
inline int estimate_branch_order(const QuantumModel& model, const RealVector& psi, const RealVector& rho, std::size_t k, const RealVector& u,
                                 double tol = 1e-6) {
  const RealMatrix lc = frozen_remainder(model, k, u);
  const RealMatrix& lk = model.control(k).generator.matrix();
  std::vector<std::vector<double>> scales;
  const auto coeffs = ad_power_coefficients(psi, rho, lc, lk, 3, &scales);
  int order = 0;
  for (std::size_t m = 0; m < coeffs.size(); ++m) {
    for (std::size_t l = 0; l < coeffs[m].size(); ++l)
      if (std::abs(coeffs[m][l]) > tol * std::max(scales[m][l], 1e-300)) return order;
    order = static_cast<int>(m) + 1;
  }
  return order;
}

// ---------------------------------------------------------------------------
// Classification.

inline ArcSegmentation classify_arcs(const QuantumModel& model, const ExtremalSolution& sol, const ClassifierTolerances& tol = {}) {
  const ControlPolicy& p = sol.policy;
  const int M = p.intervals();
  ArcSegmentation seg;
  const auto& d = sol.diagnostics;
  const double sscale = switching_scale(model, sol.trajectory.states, sol.trajectory.costates);
  for (int k = 0; k < p.channels(); ++k) {
    const auto& b = p.bound(k);
    const auto ks = static_cast<std::size_t>(k);
    const double eps_u = tol.control * (std::isfinite(b.range()) ? b.range() : 1.0);
    const double kmax = d.max_abs_switching(ks);
    // K vanishing against the switching scale marks a singular candidate even at a bound.
    const double eps_zero = tol.vanishing * sscale;
    const double eps_k = std::max(tol.switching * kmax, eps_zero);
    std::vector<ArcLabel> lab(static_cast<std::size_t>(M), ArcLabel::Ambiguous);
    std::vector<bool> candidate(static_cast<std::size_t>(M), false);
    for (int m = 0; m < M; ++m) {
      const double u = p.value(k, m);
      const double ku = d.switching[ks][static_cast<std::size_t>(m)];
      const bool at_upper = std::abs(u - b.upper) <= eps_u, at_lower = std::abs(u - b.lower) <= eps_u;
      if (std::abs(ku) <= eps_zero)
        candidate[static_cast<std::size_t>(m)] = true;
      else if (at_upper && ku >= -eps_k)
        lab[static_cast<std::size_t>(m)] = ArcLabel::RegularMax;
      else if (at_lower && ku <= eps_k)
        lab[static_cast<std::size_t>(m)] = ArcLabel::RegularMin;
      else if (std::abs(ku) <= eps_k)
        candidate[static_cast<std::size_t>(m)] = true;
    }
    // Singular candidates must form runs of at least min_singular_run intervals.
    for (int m = 0; m < M;) {
      if (!candidate[static_cast<std::size_t>(m)]) {
        ++m;
        continue;
      }
      int e = m;
      while (e + 1 < M && candidate[static_cast<std::size_t>(e) + 1]) ++e;
      if (e - m + 1 >= tol.min_singular_run)
        for (int q = m; q <= e; ++q) lab[static_cast<std::size_t>(q)] = ArcLabel::Singular;
      m = e + 1;
    }

    // Build segments; short non-regular runs between opposite bounds become corners.
    struct Piece {
      ArcLabel label;
      int first, last;
    };
    std::vector<Piece> pieces;
    for (int m = 0; m < M;) {
      int e = m;
      while (e + 1 < M && lab[static_cast<std::size_t>(e) + 1] == lab[static_cast<std::size_t>(m)]) ++e;
      pieces.push_back({lab[static_cast<std::size_t>(m)], m, e});
      m = e + 1;
    }
    std::vector<ArcSegment> segs;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const Piece& pc = pieces[i];
      const bool transition = pc.label == ArcLabel::Ambiguous && i > 0 && i + 1 < pieces.size() && is_regular(pieces[i - 1].label) &&
                              is_regular(pieces[i + 1].label) && pieces[i - 1].label != pieces[i + 1].label &&
                              pc.last - pc.first + 1 <= tol.max_transition;
      if (transition) {
        // Switching time that preserves the control area of the transition run.
        const double a = pieces[i - 1].label == ArcLabel::RegularMax ? b.upper : b.lower;
        const double c = pieces[i + 1].label == ArcLabel::RegularMax ? b.upper : b.lower;
        double area = 0.0;
        for (int q = pc.first; q <= pc.last; ++q) area += p.value(k, q) * p.step(q);
        const double t0 = p.node(pc.first), t1 = p.node(pc.last + 1);
        const double tau = std::clamp((area - c * (t1 - t0)) / (a - c) + t0, t0, t1);
        segs.back().end = tau;
        segs.back().last_interval = pc.last;
        ArcSegment next{k, pieces[i + 1].label, tau, p.node(pieces[i + 1].last + 1), pc.first, pieces[i + 1].last};
        segs.push_back(next);
        ++i;
        continue;
      }
      if (pc.label == ArcLabel::Ambiguous)
        for (int q = pc.first; q <= pc.last; ++q) seg.ambiguous_intervals.push_back(k * M + q);
      segs.push_back({k, pc.label, p.node(pc.first), p.node(pc.last + 1), pc.first, pc.last});
    }
    // Junctions between consecutive segments.
    for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
      const auto& l = segs[i];
      const auto& r = segs[i + 1];
      Junction j;
      j.channel = k;
      j.time = r.start;
      j.left_interval = std::min(l.last_interval, r.first_interval);
      j.right_interval = std::max(r.first_interval, l.last_interval);
      if (l.last_interval >= r.first_interval) {  // corner through a transition run
        j.left_interval = r.first_interval - 1;
        j.right_interval = l.last_interval + 1;
      }
      j.left_interval = std::clamp(j.left_interval, 0, M - 1);
      j.right_interval = std::clamp(j.right_interval, 0, M - 1);
      const auto nodes = p.nodes();
      j.node = static_cast<int>(std::distance(nodes.begin(), std::min_element(nodes.begin(), nodes.end(), [&](double x, double y) {
                                                return std::abs(x - j.time) < std::abs(y - j.time);
                                              })));
      const bool ls = l.label == ArcLabel::Singular, rs = r.label == ArcLabel::Singular;
      if (l.label == ArcLabel::Ambiguous || r.label == ArcLabel::Ambiguous)
        j.type = JunctionType::Ambiguous;
      else if (ls && rs)
        j.type = JunctionType::SingularToSingular;
      else if (ls)
        j.type = JunctionType::SingularToRegular;
      else if (rs)
        j.type = JunctionType::RegularToSingular;
      else
        j.type = JunctionType::Corner;
      if (ls || rs) {
        const auto node = static_cast<std::size_t>(j.node);
        const int interval = rs ? r.first_interval : l.last_interval;
        j.branch_order = estimate_branch_order(model, sol.trajectory.costates[node], sol.trajectory.states[node], static_cast<std::size_t>(k),
                                               p.values_at(interval), tol.branch);
      }
      seg.junctions.push_back(j);
    }
    for (auto& s : segs) seg.segments.push_back(s);
    seg.labels.push_back(std::move(lab));
  }
  return seg;
}

// ---------------------------------------------------------------------------
// Sewing conditions at junctions.

struct CornerResidual {
  Junction junction;
  double pontryagin_jump = 0.0;  // |K(tau-) - K(tau+)|
  double costate_jump = 0.0;     // |psi(t_m) - E_m^T psi(t_{m+1})| / |psi|
  double switching = 0.0;        // |K_u(tau)|
  double switching_rate = std::numeric_limits<double>::quiet_NaN();  // |dK_u/dt(tau)|, regular -> singular only
};

struct CornerReport {
  std::vector<CornerResidual> junctions;
  double pontryagin_scale = 0.0;
  double switching_scale = 0.0;
  double max_pontryagin_jump = 0.0;
  double max_switching = 0.0;
  double max_costate_jump = 0.0;
};

inline CornerReport verify_corner_conditions(const QuantumModel& model, const ExtremalSolution& sol, const ArcSegmentation& seg) {
  CornerReport rep;
  const auto& d = sol.diagnostics;
  const auto& tr = sol.trajectory;
  rep.pontryagin_scale = d.pontryagin_scale;
  rep.switching_scale = switching_scale(model, tr.states, tr.costates);
  for (const auto& j : seg.junctions) {
    CornerResidual r;
    r.junction = j;
    const auto ks = static_cast<std::size_t>(j.channel);
    r.pontryagin_jump = std::abs(d.pontryagin[static_cast<std::size_t>(j.left_interval)] - d.pontryagin[static_cast<std::size_t>(j.right_interval)]);
    // K_u interpolated at tau between the nodes enclosing it.
    const auto& nodes = sol.policy.nodes();
    auto it = std::upper_bound(nodes.begin(), nodes.end(), j.time);
    std::size_t hi = static_cast<std::size_t>(std::distance(nodes.begin(), it));
    hi = std::clamp<std::size_t>(hi, 1, nodes.size() - 1);
    const std::size_t lo = hi - 1;
    const double w = (j.time - nodes[lo]) / (nodes[hi] - nodes[lo]);
    r.switching = std::abs((1.0 - w) * d.switching_node[ks][lo] + w * d.switching_node[ks][hi]);
    const auto m = static_cast<std::size_t>(std::min(j.node, sol.policy.intervals() - 1));
    const RealMatrix e = linalg::expm(sol.policy.step(static_cast<int>(m)) * model.generator(sol.policy.values_at(static_cast<int>(m))));
    const RealVector& psi = tr.costates[m];
    r.costate_jump = (psi - e.transpose() * tr.costates[m + 1]).norm() / std::max(psi.norm(), 1e-300);
    if (j.type == JunctionType::RegularToSingular) r.switching_rate = std::abs(d.switching_rate[ks][static_cast<std::size_t>(j.node)]);
    rep.max_pontryagin_jump = std::max(rep.max_pontryagin_jump, r.pontryagin_jump);
    rep.max_switching = std::max(rep.max_switching, r.switching);
    rep.max_costate_jump = std::max(rep.max_costate_jump, r.costate_jump);
    rep.junctions.push_back(r);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Smoothness of singular segments.

struct SmoothnessReport {
  int channel = 0;
  int first_interval = 0;
  int last_interval = 0;
  bool insufficient = false;           // fewer than 8 intervals
  std::array<double, 4> raw_jump{};    // max |D_r(m+1) - D_r(m)|, D_r the r-th difference quotient
  std::array<double, 4> normalized{};  // raw_jump / max |D_r|
};

/// Finite-difference proxy for smoothness of u on a segment. `trim` intervals
/// are dropped at each end (junction neighbourhoods).
inline SmoothnessReport smoothness_probe(const ExtremalSolution& sol, const ArcSegment& segment, int trim = 0) {
  SmoothnessReport rep;
  rep.channel = segment.channel;
  rep.first_interval = segment.first_interval + trim;
  rep.last_interval = segment.last_interval - trim;
  const int n = rep.last_interval - rep.first_interval + 1;
  if (n < 8) {
    rep.insufficient = true;
    return rep;
  }
  const auto& p = sol.policy;
  std::vector<double> d(static_cast<std::size_t>(n)), t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int m = rep.first_interval + i;
    d[static_cast<std::size_t>(i)] = p.value(segment.channel, m);
    t[static_cast<std::size_t>(i)] = p.node(m) + 0.5 * p.step(m);
  }
  for (std::size_t r = 0; r < 4; ++r) {
    double jump = 0.0, size = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) size = std::max(size, std::abs(d[i]));
    for (std::size_t i = 0; i + 1 < d.size(); ++i) jump = std::max(jump, std::abs(d[i + 1] - d[i]));
    rep.raw_jump[r] = jump;
    rep.normalized[r] = size > 0.0 ? jump / size : 0.0;
    std::vector<double> nd(d.size() - 1), nt(d.size() - 1);
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
      nd[i] = (d[i + 1] - d[i]) / (t[i + 1] - t[i]);
      nt[i] = 0.5 * (t[i] + t[i + 1]);
    }
    d = std::move(nd);
    t = std::move(nt);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Parameter and constraint count of an arc structure.

struct StructureCounts {
  int dimension = 2;               // N
  int special_points = 0;          // N_spec: corners, regular/singular junctions and branch points
  std::vector<int> branch_orders;  // s_k >= 1 for each branch point
  int alpha = 0;                   // 1 for a free horizon
  int beta = 0;                    // singular arcs touching t_i and t_f (0..2)
  int singular_branches = 0;       // N_sing: branch points joining two singular arcs
};

struct CountResult {
  long p_total = 0;
  long c_total = 0;
  long p_branch = 0;
  long c_branch = 0;
  long deficit() const { return p_total - c_total; }
  bool resolvable() const { return p_total >= c_total; }
  std::string verdict() const {
    if (deficit() == 0) return "resolvable-equality";
    return deficit() > 0 ? "resolvable" : "requires-constraint-redundancy";
  }
};

/// P_total = N_spec + 2N^2 + P_branch + alpha,
/// C_total = 2N^2 + alpha + N_spec - N_sing + C_branch + beta,
/// with P_branch = sum (s_k - 1) and C_branch = sum ((s_k + 1)(s_k + 2)/2 - 1).
inline CountResult count_parameters_constraints(const StructureCounts& s) {
  if (s.dimension < 1 || s.special_points < 0 || s.singular_branches < 0)
    fail(ErrorCode::Parameter, "structure counts must be non-negative (N >= 1)");
  if (s.alpha != 0 && s.alpha != 1) fail(ErrorCode::Parameter, "alpha must be 0 or 1");
  if (s.beta < 0 || s.beta > 2) fail(ErrorCode::Parameter, "beta must lie in [0, 2]");
  if (static_cast<int>(s.branch_orders.size()) > s.special_points)
    fail(ErrorCode::Parameter, "more branch points than special points");
  if (s.singular_branches > static_cast<int>(s.branch_orders.size()))
    fail(ErrorCode::Parameter, "N_sing exceeds the number of branch points");
  CountResult r;
  for (int order : s.branch_orders) {
    if (order < 1) fail(ErrorCode::Parameter, "branch order must be >= 1");
    r.p_branch += order - 1;
    r.c_branch += (static_cast<long>(order) + 1) * (order + 2) / 2 - 1;
  }
  const long n2 = 2L * s.dimension * s.dimension;
  r.p_total = s.special_points + n2 + r.p_branch + s.alpha;
  r.c_total = n2 + s.alpha + s.special_points - s.singular_branches + r.c_branch + s.beta;
  return r;
}

inline StructureCounts structure_counts(const ArcSegmentation& seg, int dimension, bool free_horizon) {
  StructureCounts c;
  c.dimension = dimension;
  c.alpha = free_horizon ? 1 : 0;
  for (const auto& j : seg.junctions) {
    ++c.special_points;
    if (j.branch_order > 0) {
      c.branch_orders.push_back(j.branch_order);
      if (j.type == JunctionType::SingularToSingular) ++c.singular_branches;
    }
  }
  std::vector<int> channels;
  for (const auto& s : seg.segments)
    if (std::find(channels.begin(), channels.end(), s.channel) == channels.end()) channels.push_back(s.channel);
  for (int k : channels) {
    const auto segs = seg.segments_of(k);
    if (segs.front().label == ArcLabel::Singular) ++c.beta;
    if (segs.back().label == ArcLabel::Singular) ++c.beta;
  }
  c.beta = std::min(c.beta, 2);
  return c;
}

// ---------------------------------------------------------------------------
// Verdicts.

enum class Verdict { Pass, Fail, NotApplicable, Degenerate };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::NotApplicable: return "NOT-APPLICABLE";
    case Verdict::Degenerate: return "DEGENERATE";
  }
  return "?";
}

struct Theorem1Report {
  Verdict verdict = Verdict::NotApplicable;
  std::string reason;
  bool first_regular = false;
  bool last_regular = false;
  double degeneracy = 0.0;        // max_t |[rho, psi]|_F / (|rho| |psi|), closed models only
  double switching_peak = 0.0;    // max |K_u| / switching scale
  double pontryagin_value = 0.0;  // K (mean over the horizon)
};

/// Terminal extremals of nondegenerate problems start and end with regular arcs.
/// Kinematic critical points, abnormal solutions and identically vanishing
/// switching functions are reported as DEGENERATE.
inline Theorem1Report check_theorem1(const ProblemSpec& spec, const ExtremalSolution& sol, const ArcSegmentation& seg,
                                     double degeneracy_tol = 1e-6) {
  Theorem1Report r;
  const auto& d = sol.diagnostics;
  const auto& tr = sol.trajectory;
  double kmean = 0.0;
  for (int m = 0; m < sol.policy.intervals(); ++m) kmean += d.pontryagin[static_cast<std::size_t>(m)] * sol.policy.step(m);
  r.pontryagin_value = kmean / sol.policy.duration();
  const double sscale = switching_scale(spec.model, tr.states, tr.costates);
  double peak = 0.0;
  for (std::size_t k = 0; k < d.switching.size(); ++k) peak = std::max(peak, d.max_abs_switching(k));
  r.switching_peak = sscale > 0.0 ? peak / sscale : 0.0;
  if (!d.degeneracy.empty()) {
    for (std::size_t m = 0; m < d.degeneracy.size(); ++m) {
      const double norm = tr.states[m].norm() * tr.costates[m].norm();
      r.degeneracy = std::max(r.degeneracy, norm > 0.0 ? d.degeneracy[m] / norm : 0.0);
    }
  }
  if (spec.periodic()) {
    r.verdict = Verdict::NotApplicable;
    r.reason = "periodic problem";
    return r;
  }
  if (sol.abnormal) {
    r.verdict = Verdict::Degenerate;
    r.reason = "abnormal problem (costate vanishes)";
    return r;
  }
  if (!d.degeneracy.empty() && r.degeneracy <= degeneracy_tol) {
    r.verdict = Verdict::Degenerate;
    r.reason = "kinematic critical point ([rho, psi] = 0 along the extremal)";
    return r;
  }
  if (r.switching_peak <= degeneracy_tol) {
    r.verdict = Verdict::Degenerate;
    r.reason = "switching functions vanish identically (redundant controls)";
    return r;
  }
  r.first_regular = r.last_regular = true;
  std::vector<int> channels;
  for (const auto& s : seg.segments)
    if (std::find(channels.begin(), channels.end(), s.channel) == channels.end()) channels.push_back(s.channel);
  for (int k : channels) {
    const auto segs = seg.segments_of(k);
    r.first_regular = r.first_regular && is_regular(segs.front().label);
    r.last_regular = r.last_regular && is_regular(segs.back().label);
  }
  if (r.first_regular && r.last_regular) {
    r.verdict = Verdict::Pass;
    r.reason = "first and last arcs regular";
  } else {
    r.verdict = Verdict::Fail;
    r.reason = std::string(r.first_regular ? "" : "first arc not regular; ") + (r.last_regular ? "" : "last arc not regular");
  }
  return r;
}

struct StructureReport {
  ArcSegmentation segmentation;
  StructureCounts structure;
  CountResult counts;
  Theorem1Report theorem1;
  CornerReport corners;
  std::vector<SmoothnessReport> smoothness;
  double pontryagin_variation = 0.0;  // (max K - min K) / max(1, |K(0)|)
};

inline StructureReport analyze_structure(const ProblemSpec& spec, const ExtremalSolution& sol, const ClassifierTolerances& tol = {}) {
  StructureReport r;
  r.segmentation = classify_arcs(spec.model, sol, tol);
  r.structure = structure_counts(r.segmentation, spec.model.dimension(), spec.free_horizon());
  r.counts = count_parameters_constraints(r.structure);
  r.theorem1 = check_theorem1(spec, sol, r.segmentation);
  r.corners = verify_corner_conditions(spec.model, sol, r.segmentation);
  for (const auto& s : r.segmentation.segments)
    if (s.label == ArcLabel::Singular) r.smoothness.push_back(smoothness_probe(sol, s, 2));
  r.pontryagin_variation = sol.residuals.pontryagin_variation;
  return r;
}

}  // namespace qpmp
