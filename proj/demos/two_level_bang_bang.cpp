// Closed two-level system: drive |1> toward the sigma_z maximum with a bounded
// sigma_x field, then print the arc structure of the extremal.

#include <cstdio>

#include "qpmp/qpmp.hpp"

int main() {
  using namespace qpmp;
  TwoLevelParams p;
  p.delta = 1.0;
  p.u_min = -1.0;
  p.u_max = 1.0;
  const QuantumModel model = build_two_level(p);
  Eigen::VectorXcd excited(2);
  excited << 0, 1;
  const ProblemSpec spec(model, TerminalMode{vectorize_state(pure_state(excited), model.basis()), 1.5});

  SolverConfig cfg;
  cfg.intervals = 128;
  cfg.starts = 4;
  const auto runs = solve_multistart(spec, cfg);
  const ExtremalSolution& best = best_of(runs);
  const StructureReport rep = analyze_structure(spec, best);

  std::printf("J = %.12f  (%s, stationarity %.2e)\n", best.objective, best.convergence.status.c_str(), best.convergence.stationarity);
  for (const auto& s : rep.segmentation.segments)
    std::printf("  %-12s [%.6f, %.6f]\n", to_string(s.label), s.start, s.end);
  std::printf("first/last arcs: %s (%s)\n", to_string(rep.theorem1.verdict), rep.theorem1.reason.c_str());
  std::printf("parameters %ld, constraints %ld -> %s\n", rep.counts.p_total, rep.counts.c_total, rep.counts.verdict().c_str());
}
