#pragma once

// Piecewise-constant control policies, forward/backward propagation and the
// pointwise quantities of the maximum principle for bilinear Liouvillians.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qpmp/core.hpp"
#include "qpmp/linalg.hpp"
#include "qpmp/liouville_space.hpp"

namespace qpmp {

inline constexpr double kBoundSlack = 1e-12;
inline constexpr double kTraceTol = 1e-9;

struct ChannelBounds {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  double range() const { return upper - lower; }
  bool finite() const { return std::isfinite(lower) && std::isfinite(upper); }
  double clamp(double v) const { return std::clamp(v, lower, upper); }
  double slack() const { return kBoundSlack * std::max({1.0, std::abs(finite_or_zero(lower)), std::abs(finite_or_zero(upper))}); }

 private:
  static double finite_or_zero(double v) { return std::isfinite(v) ? v : 0.0; }
};

inline std::vector<ChannelBounds> bounds_of(const QuantumModel& model) {
  std::vector<ChannelBounds> out;
  for (const auto& c : model.controls()) out.push_back({c.lower, c.upper});
  return out;
}

/// Piecewise-constant multi-channel control on a (usually uniform) time grid.
/// values(k, m) is channel k on [nodes[m], nodes[m+1]).
class ControlPolicy {
 public:
  ControlPolicy(std::vector<double> nodes, RealMatrix values, std::vector<ChannelBounds> bounds)
      : nodes_(std::move(nodes)), values_(std::move(values)), bounds_(std::move(bounds)) {
    if (nodes_.size() < 2) fail(ErrorCode::Parameter, "policy needs at least one interval");
    for (std::size_t m = 0; m + 1 < nodes_.size(); ++m)
      if (!(nodes_[m + 1] > nodes_[m])) fail(ErrorCode::Parameter, "policy nodes must be strictly increasing (interval " + std::to_string(m) + ")");
    if (values_.cols() != intervals()) fail(ErrorCode::Shape, "policy value matrix has wrong interval count");
    if (values_.rows() != static_cast<Eigen::Index>(bounds_.size())) fail(ErrorCode::Shape, "policy value matrix has wrong channel count");
    for (int k = 0; k < channels(); ++k) {
      const auto& b = bounds_[static_cast<std::size_t>(k)];
      if (b.lower > b.upper) fail(ErrorCode::Config, "channel " + std::to_string(k + 1) + " has u_min > u_max");
      for (int m = 0; m < intervals(); ++m) {
        const double v = values_(k, m);
        if (!std::isfinite(v) || v < b.lower - b.slack() || v > b.upper + b.slack())
          fail(ErrorCode::Parameter, "control value " + std::to_string(v) + " of channel " + std::to_string(k + 1) + " on interval " +
                                         std::to_string(m) + " violates its bounds");
      }
    }
  }

  static ControlPolicy uniform(double start, double duration, int intervals, std::vector<ChannelBounds> bounds,
                               const RealVector& fill) {
    if (intervals < 1) fail(ErrorCode::Parameter, "grid needs at least one interval");
    if (!(duration > 0.0)) fail(ErrorCode::Parameter, "horizon must be positive");
    std::vector<double> nodes(static_cast<std::size_t>(intervals) + 1);
    for (int m = 0; m <= intervals; ++m) nodes[static_cast<std::size_t>(m)] = start + duration * m / intervals;
    RealMatrix values(static_cast<Eigen::Index>(bounds.size()), intervals);
    for (Eigen::Index k = 0; k < values.rows(); ++k) values.row(k).setConstant(fill(k));
    return {std::move(nodes), std::move(values), std::move(bounds)};
  }

  int intervals() const noexcept { return static_cast<int>(nodes_.size()) - 1; }
  int channels() const noexcept { return static_cast<int>(bounds_.size()); }
  double start() const noexcept { return nodes_.front(); }
  double end() const noexcept { return nodes_.back(); }
  double duration() const noexcept { return end() - start(); }
  double step(int m) const { return nodes_[static_cast<std::size_t>(m) + 1] - nodes_[static_cast<std::size_t>(m)]; }
  double node(int m) const { return nodes_[static_cast<std::size_t>(m)]; }
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const RealMatrix& values() const noexcept { return values_; }
  double value(int k, int m) const { return values_(k, m); }
  RealVector values_at(int m) const { return values_.col(m); }
  const std::vector<ChannelBounds>& bounds() const noexcept { return bounds_; }
  const ChannelBounds& bound(int k) const { return bounds_[static_cast<std::size_t>(k)]; }

  bool is_uniform(double rel_tol = 1e-9) const {
    const double h = duration() / intervals();
    for (int m = 0; m < intervals(); ++m)
      if (std::abs(step(m) - h) > rel_tol * h) return false;
    return true;
  }

  RealMatrix project(const RealMatrix& candidate) const {
    RealMatrix out = candidate;
    for (int k = 0; k < channels(); ++k)
      for (int m = 0; m < intervals(); ++m) out(k, m) = bounds_[static_cast<std::size_t>(k)].clamp(candidate(k, m));
    return out;
  }

  ControlPolicy with_values(const RealMatrix& v) const { return {nodes_, v, bounds_}; }
  ControlPolicy with_bounds(std::vector<ChannelBounds> b) const { return {nodes_, project_onto(values_, b), std::move(b)}; }

  /// Index of the interval containing t (clamped to the horizon).
  int locate(double t) const {
    if (t <= nodes_.front()) return 0;
    if (t >= nodes_.back()) return intervals() - 1;
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
    return static_cast<int>(std::distance(nodes_.begin(), it)) - 1;
  }

  /// n-fold concatenation in time.
  ControlPolicy repeated(int n) const {
    if (n < 1) fail(ErrorCode::Parameter, "repeat count must be >= 1");
    std::vector<double> nodes;
    nodes.reserve(static_cast<std::size_t>(n * intervals() + 1));
    for (int r = 0; r < n; ++r)
      for (int m = 0; m < intervals(); ++m) nodes.push_back(nodes_[static_cast<std::size_t>(m)] + r * duration());
    nodes.push_back(start() + n * duration());
    RealMatrix v(values_.rows(), values_.cols() * n);
    for (int r = 0; r < n; ++r) v.middleCols(static_cast<Eigen::Index>(r) * intervals(), intervals()) = values_;
    return {std::move(nodes), std::move(v), bounds_};
  }

  /// Same value layout stretched to a new duration.
  ControlPolicy rescaled(double new_duration) const {
    if (!(new_duration > 0.0)) fail(ErrorCode::Parameter, "horizon must be positive");
    std::vector<double> nodes(nodes_.size());
    const double s = new_duration / duration();
    for (std::size_t i = 0; i < nodes_.size(); ++i) nodes[i] = start() + (nodes_[i] - start()) * s;
    nodes.back() = start() + new_duration;
    return {std::move(nodes), values_, bounds_};
  }

  /// Splits every marked interval into `factor` equal sub-intervals.
  ControlPolicy refined(const std::vector<bool>& mark, int factor) const {
    if (factor < 1) fail(ErrorCode::Parameter, "refinement factor must be >= 1");
    std::vector<double> nodes{start()};
    std::vector<int> source;
    for (int m = 0; m < intervals(); ++m) {
      const int parts = mark[static_cast<std::size_t>(m)] ? factor : 1;
      for (int p = 1; p <= parts; ++p) {
        nodes.push_back(p == parts ? node(m + 1) : node(m) + step(m) * p / parts);
        source.push_back(m);
      }
    }
    RealMatrix v(values_.rows(), static_cast<Eigen::Index>(source.size()));
    for (std::size_t j = 0; j < source.size(); ++j) v.col(static_cast<Eigen::Index>(j)) = values_.col(source[j]);
    return {std::move(nodes), std::move(v), bounds_};
  }

  /// Piecewise-constant resampling onto new nodes (value at each new interval midpoint).
  ControlPolicy resampled(std::vector<double> new_nodes) const {
    RealMatrix v(values_.rows(), static_cast<Eigen::Index>(new_nodes.size()) - 1);
    const double scale = duration() > 0.0 ? duration() / (new_nodes.back() - new_nodes.front()) : 1.0;
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      const double mid = 0.5 * (new_nodes[static_cast<std::size_t>(j)] + new_nodes[static_cast<std::size_t>(j) + 1]);
      v.col(j) = values_.col(locate(start() + (mid - new_nodes.front()) * scale));
    }
    return {std::move(new_nodes), std::move(v), bounds_};
  }

 private:
  static RealMatrix project_onto(const RealMatrix& values, const std::vector<ChannelBounds>& b) {
    RealMatrix out = values;
    for (Eigen::Index k = 0; k < out.rows(); ++k)
      for (Eigen::Index m = 0; m < out.cols(); ++m) out(k, m) = b[static_cast<std::size_t>(k)].clamp(out(k, m));
    return out;
  }

  std::vector<double> nodes_;
  RealMatrix values_;
  std::vector<ChannelBounds> bounds_;
};

inline ControlPolicy uniform_policy(const QuantumModel& model, double duration, int intervals, const RealVector& fill) {
  return ControlPolicy::uniform(0.0, duration, intervals, bounds_of(model), fill);
}

/// States (and optionally costates) at the policy nodes.
struct Trajectory {
  BasisPtr basis;
  std::vector<double> times;
  std::vector<RealVector> states;
  std::vector<RealVector> costates;

  bool has_states() const { return !states.empty(); }
  bool has_costates() const { return !costates.empty(); }
  std::size_t nodes() const { return times.size(); }
  LiouvilleVector state(std::size_t m) const { return {basis, states.at(m)}; }
  LiouvilleVector costate(std::size_t m) const { return {basis, costates.at(m)}; }
};

inline void require_compatible(const QuantumModel& model, const ControlPolicy& policy) {
  if (policy.channels() != static_cast<int>(model.channel_count()))
    fail(ErrorCode::Shape, "policy has " + std::to_string(policy.channels()) + " channels, model has " +
                               std::to_string(model.channel_count()));
}

/// exp(h_m L(u_m)) for every interval.
inline std::vector<RealMatrix> step_propagators(const QuantumModel& model, const ControlPolicy& policy) {
  require_compatible(model, policy);
  std::vector<RealMatrix> out;
  out.reserve(static_cast<std::size_t>(policy.intervals()));
  for (int m = 0; m < policy.intervals(); ++m) {
    RealMatrix e = linalg::expm(policy.step(m) * model.generator(policy.values_at(m)));
    if (!e.allFinite()) fail(ErrorCode::Propagation, "non-finite propagator on interval " + std::to_string(m));
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<RealVector> forward_states(const std::vector<RealMatrix>& steps, const RealVector& initial) {
  std::vector<RealVector> out;
  out.reserve(steps.size() + 1);
  out.push_back(initial);
  for (std::size_t m = 0; m < steps.size(); ++m) {
    out.push_back(steps[m] * out.back());
    if (!out.back().allFinite()) fail(ErrorCode::Propagation, "non-finite state after interval " + std::to_string(m));
  }
  return out;
}

/// <psi(t_m)| = <psi(t_{m+1})| E_m, returned as column vectors.
inline std::vector<RealVector> backward_costates(const std::vector<RealMatrix>& steps, const RealVector& final_costate) {
  std::vector<RealVector> out(steps.size() + 1);
  out.back() = final_costate;
  for (std::size_t m = steps.size(); m-- > 0;) {
    out[m] = steps[m].transpose() * out[m + 1];
    if (!out[m].allFinite()) fail(ErrorCode::Propagation, "non-finite costate before interval " + std::to_string(m));
  }
  return out;
}

inline Trajectory propagate_state(const QuantumModel& model, const ControlPolicy& policy, const LiouvilleVector& initial) {
  const double tr = initial.trace();
  if (std::abs(tr - 1.0) > kTraceTol) fail(ErrorCode::StateValidity, "initial state trace is " + std::to_string(tr));
  Trajectory t{model.basis(), policy.nodes(), forward_states(step_propagators(model, policy), initial.coefficients()), {}};
  const RealVector& one = model.basis()->identity();
  for (std::size_t m = 0; m < t.states.size(); ++m) {
    const double d = std::abs(one.dot(t.states[m]) - 1.0);
    if (d > kTraceTol) fail(ErrorCode::Propagation, "trace drift " + std::to_string(d) + " at node " + std::to_string(m));
  }
  return t;
}

inline Trajectory propagate_costate_backward(const QuantumModel& model, const ControlPolicy& policy, const LiouvilleVector& final_costate) {
  return {model.basis(), policy.nodes(), {}, backward_costates(step_propagators(model, policy), final_costate.coefficients())};
}

/// Full propagator over the policy horizon (product of the step propagators).
inline RealMatrix horizon_propagator(const std::vector<RealMatrix>& steps) {
  RealMatrix p = RealMatrix::Identity(steps.front().rows(), steps.front().cols());
  for (const auto& e : steps) p = e * p;
  return p;
}

// ---------------------------------------------------------------------------
// Pointwise maximum-principle quantities.

inline void require_vector_sizes(const QuantumModel& model, const RealVector& psi, const RealVector& rho) {
  if (psi.size() != model.basis()->size() || rho.size() != model.basis()->size())
    fail(ErrorCode::Shape, "costate/state length does not match N^2 = " + std::to_string(model.basis()->size()));
}

/// K = <psi| (L0 + sum u_k L_k) |rho>.
inline double pontryagin_function(const RealVector& psi, const RealVector& rho, const QuantumModel& model, const RealVector& u) {
  require_vector_sizes(model, psi, rho);
  if (u.size() != static_cast<Eigen::Index>(model.channel_count())) fail(ErrorCode::Shape, "control vector has wrong length");
  return psi.dot(model.generator(u) * rho);
}

inline double pontryagin_function(const LiouvilleVector& psi, const LiouvilleVector& rho, const QuantumModel& model, const RealVector& u) {
  return pontryagin_function(psi.coefficients(), rho.coefficients(), model, u);
}

/// K_{u_k} = <psi| L_k |rho>.
inline double switching_function(const RealVector& psi, const RealVector& rho, const QuantumModel& model, std::size_t k) {
  require_vector_sizes(model, psi, rho);
  if (k >= model.channel_count()) fail(ErrorCode::Shape, "no control channel " + std::to_string(k + 1));
  return psi.dot(model.control(k).generator.matrix() * rho);
}

inline double switching_function(const LiouvilleVector& psi, const LiouvilleVector& rho, const QuantumModel& model, std::size_t k) {
  return switching_function(psi.coefficients(), rho.coefficients(), model, k);
}

/// Drift with every channel except k frozen at the given values.
inline RealMatrix frozen_remainder(const QuantumModel& model, std::size_t k, const RealVector& u) {
  RealVector others = u;
  others(static_cast<Eigen::Index>(k)) = 0.0;
  return model.generator(others);
}

/// Time derivatives of the switching function of channel k with the other
/// channels frozen into L_c:
///   dK_u/dt     = <psi|[L_k, L_c]|rho>
///   d2K_u/dt2   = drift_term + u_k * control_term
///   drift_term  = <psi|[[L_k, L_c], L_c]|rho>
///   control_term= <psi|[[L_k, L_c], L_k]|rho>
struct SwitchingDerivatives {
  double first = 0.0;
  double drift_term = 0.0;
  double control_term = 0.0;
  double control_term_scale = 0.0;  // |psi| |[[L_k, L_c], L_k]| |rho|

  double second(double uk) const { return drift_term + uk * control_term; }
};

inline SwitchingDerivatives switching_derivatives(const RealVector& psi, const RealVector& rho, const QuantumModel& model, std::size_t k,
                                                  const RealVector& u) {
  require_vector_sizes(model, psi, rho);
  if (k >= model.channel_count()) fail(ErrorCode::Shape, "no control channel " + std::to_string(k + 1));
  const RealMatrix lc = frozen_remainder(model, k, u);
  const RealMatrix& lk = model.control(k).generator.matrix();
  const RealMatrix c1 = linalg::commutator(lk, lc);
  const RealMatrix ccc = linalg::commutator(c1, lk);
  SwitchingDerivatives d;
  d.first = psi.dot(c1 * rho);
  d.drift_term = psi.dot(linalg::commutator(c1, lc) * rho);
  d.control_term = psi.dot(ccc * rho);
  d.control_term_scale = psi.norm() * ccc.norm() * rho.norm();
  return d;
}

inline SwitchingDerivatives switching_derivatives(const LiouvilleVector& psi, const LiouvilleVector& rho, const QuantumModel& model,
                                                  std::size_t k, const RealVector& u) {
  return switching_derivatives(psi.coefficients(), rho.coefficients(), model, k, u);
}

struct SingularTolerances {
  double switching = 1e-8;  // |K_u| threshold
  double rate = 1e-8;       // |dK_u/dt| threshold
  double branch = 1e-10;    // |control_term| relative to its commutator-norm scale
};

struct SingularControl {
  double value = std::numeric_limits<double>::quiet_NaN();
  bool branch_point = false;
  bool out_of_bounds = false;
  double numerator = 0.0;    // drift_term
  double denominator = 0.0;  // control_term
};

/// Control value that keeps d2K_u/dt2 = 0 on a singular arc: u = -drift_term / control_term.
/// Returns a branch-point flag when the denominator vanishes.
inline SingularControl singular_control_value(const RealVector& psi, const RealVector& rho, const QuantumModel& model, std::size_t k,
                                              const RealVector& u, const SingularTolerances& tol = {}) {
  const double ku = switching_function(psi, rho, model, k);
  const SwitchingDerivatives d = switching_derivatives(psi, rho, model, k, u);
  if (std::abs(ku) > tol.switching || std::abs(d.first) > tol.rate)
    fail(ErrorCode::Precondition, "point is not singular for channel " + std::to_string(k + 1) + " (|K_u| = " + std::to_string(std::abs(ku)) +
                                      ", |dK_u/dt| = " + std::to_string(std::abs(d.first)) + ")");
  SingularControl s;
  s.numerator = d.drift_term;
  s.denominator = d.control_term;
  if (std::abs(d.control_term) <= tol.branch * std::max(d.control_term_scale, std::numeric_limits<double>::min())) {
    s.branch_point = true;
    return s;
  }
  s.value = -d.drift_term / d.control_term;
  const auto& c = model.control(k);
  s.out_of_bounds = s.value < c.lower || s.value > c.upper;
  return s;
}

inline SingularControl singular_control_value(const LiouvilleVector& psi, const LiouvilleVector& rho, const QuantumModel& model,
                                              std::size_t k, const RealVector& u, const SingularTolerances& tol = {}) {
  return singular_control_value(psi.coefficients(), rho.coefficients(), model, k, u, tol);
}

/// ||[rho, O_frame]||_F for closed models. `frame_observable` is the
/// observable propagated back to time t (any costate of a closed terminal
/// problem works: it differs from that by a multiple of the identity).
inline double kinematic_degeneracy(const QuantumModel& model, const LiouvilleVector& rho, const LiouvilleVector& frame_observable) {
  if (!model.closed()) fail(ErrorCode::NotApplicable, "kinematic degeneracy is defined for closed (unitary) models only");
  return linalg::commutator(rho.to_matrix(), frame_observable.to_matrix()).norm();
}

/// -i Tr[[rho, O_frame] mu_k]: the closed-system form of the switching function.
inline double closed_switching_criterion(const QuantumModel& model, const LiouvilleVector& rho, const LiouvilleVector& frame_observable,
                                         std::size_t k) {
  if (!model.closed()) fail(ErrorCode::NotApplicable, "closed-system criterion needs Hamiltonian controls");
  const ComplexMatrix c = linalg::commutator(rho.to_matrix(), frame_observable.to_matrix());
  return (Complex(0.0, -1.0) * (c * (*model.control(k).hamiltonian)).trace()).real();
}

// ---------------------------------------------------------------------------
// Diagnostics along a jointly propagated (state, costate) pair.

/// Row m < M describes interval m: `pontryagin` is the (constant) value of K
/// on the interval and `switching` the interval average of K_u. Row M holds
/// node values at the final time. Node-wise quantities (`switching_node`,
/// `switching_rate`, second-derivative terms) are evaluated at t_m with the
/// controls of interval m (of the last interval at t_M).
struct DiagnosticsTrace {
  std::vector<double> times;
  std::vector<double> pontryagin;
  std::vector<std::vector<double>> switching;
  std::vector<std::vector<double>> switching_node;
  std::vector<std::vector<double>> switching_rate;
  std::vector<std::vector<double>> drift_term;
  std::vector<std::vector<double>> control_term;
  std::vector<double> degeneracy;  // empty unless the model is closed
  /// max_t (|<psi|L0|rho>| + sum_k |u_k K_uk|): scale for K-based tolerances.
  double pontryagin_scale = 0.0;

  double pontryagin_variation() const {
    if (pontryagin.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(pontryagin.begin(), pontryagin.end());
    return *hi - *lo;
  }
  double max_abs_switching(std::size_t k) const {
    double m = 0.0;
    for (double v : switching[k]) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Interval integrals of the switching functions, \int_{t_m}^{t_{m+1}} K_uk dt:
/// this is exactly dJ/du_k[m] for the piecewise-constant parameterization.
inline RealMatrix interval_switching_integrals(const QuantumModel& model, const ControlPolicy& policy, const std::vector<RealVector>& states,
                                               const std::vector<RealVector>& costates) {
  const int channels = policy.channels();
  RealMatrix g = RealMatrix::Zero(channels, policy.intervals());
  if (channels == 0) return g;
  std::vector<const RealMatrix*> dirs;
  for (const auto& c : model.controls()) dirs.push_back(&c.generator.matrix());
  for (int m = 0; m < policy.intervals(); ++m) {
    const auto ed = linalg::expm_with_derivatives(model.generator(policy.values_at(m)), dirs, policy.step(m));
    const RealVector& rho = states[static_cast<std::size_t>(m)];
    const RealVector& psi = costates[static_cast<std::size_t>(m) + 1];
    for (int k = 0; k < channels; ++k) g(k, m) = psi.dot(ed.derivatives[static_cast<std::size_t>(k)] * rho);
  }
  return g;
}

inline DiagnosticsTrace compute_diagnostics(const QuantumModel& model, const ControlPolicy& policy, const Trajectory& traj,
                                            const RealMatrix* interval_integrals = nullptr) {
  if (!traj.has_states() || !traj.has_costates()) fail(ErrorCode::Precondition, "diagnostics need both state and costate");
  const int M = policy.intervals();
  const auto K = static_cast<std::size_t>(policy.channels());
  RealMatrix integrals = interval_integrals ? *interval_integrals : interval_switching_integrals(model, policy, traj.states, traj.costates);
  DiagnosticsTrace d;
  d.times = policy.nodes();
  d.pontryagin.resize(static_cast<std::size_t>(M) + 1);
  d.switching.assign(K, std::vector<double>(static_cast<std::size_t>(M) + 1));
  d.switching_node = d.switching;
  d.switching_rate = d.switching;
  d.drift_term = d.switching;
  d.control_term = d.switching;
  const bool closed = model.closed();
  if (closed) d.degeneracy.resize(static_cast<std::size_t>(M) + 1);
  for (int m = 0; m <= M; ++m) {
    const int interval = std::min(m, M - 1);
    const RealVector u = policy.values_at(interval);
    const RealVector& rho = traj.states[static_cast<std::size_t>(m)];
    const RealVector& psi = traj.costates[static_cast<std::size_t>(m)];
    const auto row = static_cast<std::size_t>(m);
    d.pontryagin[row] = pontryagin_function(psi, rho, model, u);
    double scale = std::abs(psi.dot(model.drift().matrix() * rho));
    for (std::size_t k = 0; k < K; ++k) {
      const double node_value = switching_function(psi, rho, model, k);
      d.switching_node[k][row] = node_value;
      d.switching[k][row] = m < M ? integrals(static_cast<Eigen::Index>(k), m) / policy.step(m) : node_value;
      const auto sd = switching_derivatives(psi, rho, model, k, u);
      d.switching_rate[k][row] = sd.first;
      d.drift_term[k][row] = sd.drift_term;
      d.control_term[k][row] = sd.control_term;
      scale += std::abs(u(static_cast<Eigen::Index>(k)) * node_value);
    }
    d.pontryagin_scale = std::max(d.pontryagin_scale, scale);
    if (closed)
      d.degeneracy[row] = kinematic_degeneracy(model, LiouvilleVector(model.basis(), rho), LiouvilleVector(model.basis(), psi));
  }
  return d;
}

}  // namespace qpmp
