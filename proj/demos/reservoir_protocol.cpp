// Two-level system with a cooling collision channel and a sigma_x drive:
// the optimum first dissipates toward |0> and then rotates coherently.

#include <cstdio>

#include "qpmp/qpmp.hpp"

int main() {
  using namespace qpmp;
  TwoLevelParams p;
  p.variant = TwoLevelVariant::Collision;
  p.delta = 0.0;
  p.gamma = 0.0;
  p.coherent = true;
  Eigen::VectorXcd ground(2);
  ground << 1, 0;
  p.targets = {{pure_state(ground), 0.0, 5.0}};
  const double theta = std::numbers::pi / 3;
  Eigen::VectorXcd target(2);
  target << std::cos(theta / 2), Complex(0, -std::sin(theta / 2));
  p.observable = pure_state(target);
  const QuantumModel model = build_two_level(p);
  const ProblemSpec spec(model, TerminalMode{vectorize_state(thermal_state(0.5), model.basis()), 3.0});

  SolverConfig cfg;
  cfg.intervals = 96;
  cfg.starts = 4;
  const CcProtocolReport rep = cc_protocol_demo(spec, cfg);
  std::printf("structure %s, J = %.8f\n", rep.structure.c_str(), rep.objective);
  std::printf("dissipation off at t = %.4f; %s\n", rep.dissipation_off_at, rep.description.c_str());
}
