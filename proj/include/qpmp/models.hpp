#pragma once

// Ready-made models. Time unit of the Lambda system is microseconds, so
// frequencies are in rad/us and decay rates in 1/us.

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "qpmp/core.hpp"
#include "qpmp/dynamics.hpp"
#include "qpmp/liouville_space.hpp"

namespace qpmp {

inline ComplexMatrix ket_bra(int n, int i, int j) {
  ComplexMatrix m = ComplexMatrix::Zero(n, n);
  m(i, j) = 1.0;
  return m;
}

// ---------------------------------------------------------------------------
// Lambda system: ground doublet |1>, |2> coupled through the excited level |3>.

enum class FrequencyConvention {
  Ordinary2Pi,  // table values are ordinary frequencies; multiply by 2*pi
  Angular,      // table values are already angular frequencies
};

inline const char* to_string(FrequencyConvention c) { return c == FrequencyConvention::Angular ? "angular" : "2pi"; }

struct LambdaSystemParams {
  double delta_mhz = 1.59;
  double g1_khz = 159.0;
  double g2_khz = 127.0;
  double gamma1_per_ms = 554.0;  // 3 -> 1
  double gamma2_per_ms = 554.0;  // 3 -> 2
  double gamma3_per_ms = 236.0;  // 2 -> 1
  FrequencyConvention convention = FrequencyConvention::Ordinary2Pi;
  /// H contains delta_sign * Delta |2><2|.
  double delta_sign = -1.0;
  /// Relative phase of the 2-3 coupling. Only |g2| is physical; the sign
  /// is equivalent to |2> -> -|2>, which flips the sign of the objective.
  double g2_sign = -1.0;
  /// Detuning control bounds in rad/us (unbounded by default).
  double u_min = -std::numeric_limits<double>::infinity();
  double u_max = std::numeric_limits<double>::infinity();

  /// rad/us per MHz under the chosen convention.
  double frequency_scale() const { return convention == FrequencyConvention::Angular ? 1.0 : 2.0 * std::numbers::pi; }
};

inline void validate(const LambdaSystemParams& p) {
  for (double r : {p.gamma1_per_ms, p.gamma2_per_ms, p.gamma3_per_ms})
    if (!(r >= 0.0)) fail(ErrorCode::NegativeRate, "Lambda-system decay rates must be >= 0");
  if (!(p.delta_mhz >= 0.0) || !(p.g1_khz >= 0.0) || !(p.g2_khz >= 0.0))
    fail(ErrorCode::Parameter, "Lambda-system Delta, g1, g2 are magnitudes and must be >= 0");
  if (std::abs(p.delta_sign) != 1.0 || std::abs(p.g2_sign) != 1.0) fail(ErrorCode::Parameter, "delta_sign and g2_sign must be +1 or -1");
}

inline ComplexMatrix lambda_hamiltonian(const LambdaSystemParams& p) {
  const double w = p.frequency_scale();
  const double delta = w * p.delta_mhz;
  const double g1 = w * p.g1_khz * 1e-3;
  const double g2 = p.g2_sign * w * p.g2_khz * 1e-3;
  ComplexMatrix h = p.delta_sign * delta * ket_bra(3, 1, 1);
  h += g1 * (ket_bra(3, 0, 2) + ket_bra(3, 2, 0));
  h += g2 * (ket_bra(3, 1, 2) + ket_bra(3, 2, 1));
  return h;
}

inline QuantumModel build_lambda_system(const LambdaSystemParams& p = {}) {
  validate(p);
  auto basis = build_hermitian_basis(3);
  const ComplexMatrix h = lambda_hamiltonian(p);
  Superoperator drift = hamiltonian_superop(h, basis);
  drift = drift + lindblad_superop(ket_bra(3, 0, 2), p.gamma1_per_ms * 1e-3, basis);
  drift = drift + lindblad_superop(ket_bra(3, 1, 2), p.gamma2_per_ms * 1e-3, basis);
  drift = drift + lindblad_superop(ket_bra(3, 0, 1), p.gamma3_per_ms * 1e-3, basis);
  std::vector<ControlChannel> controls{coherent_channel("detuning", ket_bra(3, 2, 2), basis, p.u_min, p.u_max, "rad/us")};
  const LiouvilleVector o = vectorize(ket_bra(3, 0, 1) + ket_bra(3, 1, 0), basis);
  const double redundancy = (o.coefficients().transpose() * controls[0].generator.matrix()).norm();
  if (redundancy >= 1e-12) fail(ErrorCode::Precondition, "Lambda-system objective is not annihilated by the control generator");
  return {basis, drift, std::move(controls), o, h};
}

/// u(t) = w * (offset + amplitude cos(2 pi t / period)) with offsets in MHz,
/// sampled at interval midpoints.
inline ControlPolicy harmonic_reference_policy(const QuantumModel& model, const LambdaSystemParams& p, double period, int intervals,
                                               double offset_mhz = -1.58, double amplitude_mhz = 1.61) {
  ControlPolicy policy = uniform_policy(model, period, intervals, RealVector::Zero(1));
  RealMatrix v(1, intervals);
  for (int m = 0; m < intervals; ++m) {
    const double t = policy.node(m) + 0.5 * policy.step(m);
    v(0, m) = p.frequency_scale() * (offset_mhz + amplitude_mhz * std::cos(2.0 * std::numbers::pi * t / period));
  }
  // The reference may exceed finite bounds; widen them rather than clip.
  auto b = policy.bounds();
  b[0].lower = std::min(b[0].lower, v.minCoeff());
  b[0].upper = std::max(b[0].upper, v.maxCoeff());
  return ControlPolicy(policy.nodes(), v, b);
}

// ---------------------------------------------------------------------------
// Two-level testbeds. Basis states |0>, |1>; sigma_z = diag(1, -1).

inline ComplexMatrix pauli_x() {
  ComplexMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline ComplexMatrix pauli_y() {
  ComplexMatrix m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}
inline ComplexMatrix pauli_z() {
  ComplexMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
inline ComplexMatrix pure_state(const Eigen::VectorXcd& ket) {
  const Eigen::VectorXcd k = ket / ket.norm();
  return k * k.adjoint();
}

enum class TwoLevelVariant { Closed, Thermal, Collision };

struct CollisionTarget {
  ComplexMatrix state;
  double lower = 0.0;
  double upper = 1.0;
};

struct TwoLevelParams {
  double delta = 1.0;  // H0 = (delta / 2) sigma_z + (delta_x / 2) sigma_x
  double delta_x = 0.0;
  TwoLevelVariant variant = TwoLevelVariant::Closed;
  /// Coherent channel mu = sigma_x with these bounds (Closed and Thermal; optional for Collision).
  bool coherent = true;
  double u_min = -1.0;
  double u_max = 1.0;
  /// Thermal (and Collision when gamma > 0): relaxation at total rate gamma toward diag(p0, 1 - p0).
  double gamma = 0.1;
  double p0 = 0.2;
  /// Collision: one channel per target.
  std::vector<CollisionTarget> targets;
  ComplexMatrix observable = pauli_z();
};

/// Decay pair |0><1| (rate gamma p0) and |1><0| (rate gamma (1 - p0)); detailed
/// balance makes diag(p0, 1 - p0) stationary.
inline Superoperator thermal_relaxation(double gamma, double p0, const BasisPtr& basis) {
  if (!(p0 >= 0.0 && p0 <= 1.0)) fail(ErrorCode::Parameter, "thermal population must lie in [0, 1]");
  return lindblad_superop(ket_bra(2, 0, 1), gamma * p0, basis) + lindblad_superop(ket_bra(2, 1, 0), gamma * (1.0 - p0), basis);
}

inline ComplexMatrix thermal_state(double p0) {
  ComplexMatrix r = ComplexMatrix::Zero(2, 2);
  r(0, 0) = p0;
  r(1, 1) = 1.0 - p0;
  return r;
}

inline QuantumModel build_two_level(const TwoLevelParams& p) {
  auto basis = build_hermitian_basis(2);
  const ComplexMatrix h0 = 0.5 * p.delta * pauli_z() + 0.5 * p.delta_x * pauli_x();
  Superoperator drift = hamiltonian_superop(h0, basis);
  std::vector<ControlChannel> controls;
  std::optional<ComplexMatrix> drift_h = h0;
  switch (p.variant) {
    case TwoLevelVariant::Closed:
      if (!p.coherent) fail(ErrorCode::Config, "closed two-level model needs its coherent channel");
      controls.push_back(coherent_channel("sigma_x", pauli_x(), basis, p.u_min, p.u_max));
      break;
    case TwoLevelVariant::Thermal:
      if (!(p.gamma >= 0.0)) fail(ErrorCode::NegativeRate, "thermal relaxation rate must be >= 0");
      drift = drift + thermal_relaxation(p.gamma, p.p0, basis);
      drift_h.reset();
      if (p.coherent) controls.push_back(coherent_channel("sigma_x", pauli_x(), basis, p.u_min, p.u_max));
      break;
    case TwoLevelVariant::Collision:
      if (p.targets.empty() && !p.coherent) fail(ErrorCode::Config, "collision two-level model needs at least one channel");
      if (!(p.gamma >= 0.0)) fail(ErrorCode::NegativeRate, "thermal relaxation rate must be >= 0");
      if (p.gamma > 0.0) drift = drift + thermal_relaxation(p.gamma, p.p0, basis);
      drift_h.reset();
      if (p.coherent) controls.push_back(coherent_channel("sigma_x", pauli_x(), basis, p.u_min, p.u_max));
      for (std::size_t i = 0; i < p.targets.size(); ++i) {
        const auto& t = p.targets[i];
        if (t.lower < 0.0) fail(ErrorCode::Config, "collision channel " + std::to_string(i + 1) + " has a negative lower bound");
        controls.push_back(collision_channel("collision_" + std::to_string(i + 1), t.state, basis, t.lower, t.upper));
      }
      break;
  }
  return {basis, drift, std::move(controls), vectorize(p.observable, basis), drift_h};
}

// ---------------------------------------------------------------------------
// Random N-level Lindblad model with one coherent control (test fixture).

inline ComplexMatrix random_hermitian(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, 1.0);
  ComplexMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Complex(d(rng), d(rng));
  return 0.5 * scale * (a + a.adjoint());
}

inline ComplexMatrix random_density(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  ComplexMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Complex(d(rng), d(rng));
  ComplexMatrix r = a * a.adjoint();
  return r / r.trace().real();
}

struct RandomLindbladParams {
  int dimension = 3;
  int jumps = 2;
  double rate = 0.2;
  double u_min = -1.0;
  double u_max = 1.0;
  std::uint64_t seed = 7;
};

inline QuantumModel build_random_lindblad(const RandomLindbladParams& p) {
  std::mt19937_64 rng(p.seed);
  auto basis = build_hermitian_basis(p.dimension);
  const ComplexMatrix h0 = random_hermitian(p.dimension, rng);
  Superoperator drift = hamiltonian_superop(h0, basis);
  std::normal_distribution<double> d(0.0, 1.0);
  for (int j = 0; j < p.jumps; ++j) {
    ComplexMatrix l(p.dimension, p.dimension);
    for (int a = 0; a < p.dimension; ++a)
      for (int b = 0; b < p.dimension; ++b) l(a, b) = Complex(d(rng), d(rng));
    l /= l.norm();
    drift = drift + lindblad_superop(l, p.rate, basis);
  }
  std::vector<ControlChannel> controls{coherent_channel("mu", random_hermitian(p.dimension, rng), basis, p.u_min, p.u_max)};
  const LiouvilleVector o = vectorize(random_hermitian(p.dimension, rng), basis);
  return {basis, drift, std::move(controls), o};
}

/// CLI model identifiers.
inline const std::vector<std::string>& model_identifiers() {
  static const std::vector<std::string> ids{"lambda", "two-level-closed", "two-level-thermal", "two-level-collision", "random-lindblad"};
  return ids;
}

}  // namespace qpmp
