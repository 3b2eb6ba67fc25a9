#pragma once

// Problem fixtures shared by the unit suite and the acceptance binary.

#include <numbers>

#include "qpmp/qpmp.hpp"

namespace qpmp::testbeds {

inline Eigen::VectorXcd ket(std::initializer_list<Complex> amps) {
  Eigen::VectorXcd k(static_cast<Eigen::Index>(amps.size()));
  Eigen::Index i = 0;
  for (const auto& a : amps) k(i++) = a;
  return k / k.norm();
}

inline ComplexMatrix ground() { return pure_state(ket({1, 0})); }
inline ComplexMatrix excited() { return pure_state(ket({0, 1})); }
inline ComplexMatrix plus() { return pure_state(ket({1, 1})); }

/// sigma_z-target transfer from |1> with a bounded sigma_x field.
inline ProblemSpec closed_two_level(double horizon, double delta = 1.0, double bound = 1.0) {
  TwoLevelParams p;
  p.delta = delta;
  p.u_min = -bound;
  p.u_max = bound;
  const QuantumModel m = build_two_level(p);
  return {m, TerminalMode{vectorize_state(excited(), m.basis()), horizon}};
}

/// Relaxing qubit started in its thermal state, objective <sigma_x>.
inline ProblemSpec thermal_two_level(double horizon, bool free_time = false, double gamma = 0.3) {
  TwoLevelParams p;
  p.variant = TwoLevelVariant::Thermal;
  p.delta = 1.0;
  p.gamma = gamma;
  p.p0 = 0.2;
  p.observable = pauli_x();
  const QuantumModel m = build_two_level(p);
  return {m, TerminalMode{vectorize_state(thermal_state(0.2), m.basis()), horizon, free_time}};
}

/// Pure start relaxing toward the maximally mixed state: <sigma_x> peaks at a finite horizon.
inline ProblemSpec dephasing_rotation(double horizon, bool free_time = false) {
  TwoLevelParams p;
  p.variant = TwoLevelVariant::Thermal;
  p.delta = 1.0;
  p.gamma = 0.5;
  p.p0 = 0.5;
  p.observable = pauli_x();
  const QuantumModel m = build_two_level(p);
  return {m, TerminalMode{vectorize_state(ground(), m.basis()), horizon, free_time}};
}

inline ProblemSpec thermal_periodic(double period) {
  TwoLevelParams p;
  p.variant = TwoLevelVariant::Thermal;
  p.delta = 1.0;
  p.gamma = 0.5;
  p.p0 = 0.1;
  p.observable = pauli_x();
  return {build_two_level(p), PeriodicMode{period, false}};
}

inline ProblemSpec random_lindblad(std::uint64_t seed, double horizon, int dimension = 3) {
  RandomLindbladParams p;
  p.dimension = dimension;
  p.seed = seed;
  const QuantumModel m = build_random_lindblad(p);
  Eigen::VectorXcd k = Eigen::VectorXcd::Zero(dimension);
  k(0) = 1.0;
  return {m, TerminalMode{vectorize_state(pure_state(k), m.basis()), horizon}};
}

/// Two collision channels (targets |0> and |+>) on a tilted, relaxing qubit; <sigma_x>.
inline ProblemSpec two_collision(double horizon) {
  TwoLevelParams p;
  p.variant = TwoLevelVariant::Collision;
  p.coherent = false;
  p.delta = 1.0;
  p.delta_x = 0.7;
  p.gamma = 0.3;
  p.p0 = 0.2;
  p.targets = {{ground(), 0.0, 2.0}, {plus(), 0.0, 2.0}};
  p.observable = pauli_x();
  const QuantumModel m = build_two_level(p);
  return {m, TerminalMode{vectorize_state(thermal_state(0.3), m.basis()), horizon}};
}

/// One collision channel toward |0>, objective = fidelity with |0>.
inline ProblemSpec single_collision(double horizon) {
  TwoLevelParams p;
  p.variant = TwoLevelVariant::Collision;
  p.coherent = false;
  p.delta = 1.0;
  p.delta_x = 0.7;
  p.gamma = 0.3;
  p.targets = {{ground(), 0.0, 1.5}};
  p.observable = ground();
  const QuantumModel m = build_two_level(p);
  return {m, TerminalMode{vectorize_state(thermal_state(0.4), m.basis()), horizon}};
}

/// Cooling collision channel plus sigma_x drive toward a state rotated by pi/3 from |0>.
inline ProblemSpec reservoir_drive(double coherent_bound = 1.0, double cooling_rate = 5.0, double horizon = 3.0,
                                   const ComplexMatrix& start = thermal_state(0.5)) {
  TwoLevelParams p;
  p.variant = TwoLevelVariant::Collision;
  p.delta = 0.0;
  p.gamma = 0.0;
  p.coherent = true;
  p.u_min = -coherent_bound;
  p.u_max = coherent_bound;
  p.targets = {{ground(), 0.0, cooling_rate}};
  const double th = std::numbers::pi / 3.0;
  p.observable = pure_state(ket({std::cos(th / 2), Complex(0, -std::sin(th / 2))}));
  const QuantumModel m = build_two_level(p);
  return {m, TerminalMode{vectorize_state(start, m.basis()), horizon}};
}

/// rho_0 = rho_k = |0><0|, a sigma_z drive and O = sigma_z: nothing can move the state.
inline ProblemSpec redundant_collision() {
  auto basis = build_hermitian_basis(2);
  std::vector<ControlChannel> ch{coherent_channel("sigma_z", pauli_z(), basis, -1.0, 1.0),
                                 collision_channel("collision_1", ground(), basis, 0.0, 1.0)};
  const QuantumModel m(basis, Superoperator::zero(basis), ch, vectorize(pauli_z(), basis));
  return {m, TerminalMode{vectorize_state(ground(), basis), 1.0}};
}

}  // namespace qpmp::testbeds
