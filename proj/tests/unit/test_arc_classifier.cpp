#include <gtest/gtest.h>

#include "../testbeds.hpp"

using namespace qpmp;
namespace tb = qpmp::testbeds;

namespace {

ExtremalSolution best_solution(const ProblemSpec& spec, int intervals, int starts = 4) {
  SolverConfig cfg;
  cfg.intervals = intervals;
  cfg.starts = starts;
  const auto runs = solve_multistart(spec, cfg);
  return best_of(runs);
}

}  // namespace

TEST(ClassifyArcs, ClosedTwoLevelIsMinThenMax) {
  const ProblemSpec s = tb::closed_two_level(1.5);
  const ExtremalSolution e = best_solution(s, 128);
  const StructureReport r = analyze_structure(s, e);
  const auto segs = r.segmentation.segments_of(0);
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].label, ArcLabel::RegularMin);
  EXPECT_EQ(segs[1].label, ArcLabel::RegularMax);
  EXPECT_NEAR(segs[0].end, 1.4406, 2e-3);
  ASSERT_EQ(r.segmentation.junctions.size(), 1u);
  EXPECT_EQ(r.segmentation.junctions[0].type, JunctionType::Corner);
  EXPECT_EQ(r.segmentation.junctions[0].branch_order, 0);
  EXPECT_TRUE(r.segmentation.ambiguous_intervals.empty());
  EXPECT_LT(r.corners.max_costate_jump, 1e-10);
  EXPECT_LT(r.corners.max_switching, 1e-6 * r.corners.switching_scale);
  EXPECT_EQ(r.theorem1.verdict, Verdict::Pass);
  EXPECT_EQ(r.counts.deficit(), 0);
  EXPECT_EQ(r.counts.verdict(), "resolvable-equality");
}

TEST(ClassifyArcs, HandBuiltBangBangPolicy) {
  // A grid policy switching exactly where the extremal switches is labelled
  // interval by interval from the signs of K_u.
  const ProblemSpec s = tb::closed_two_level(1.5);
  const ExtremalSolution ref = best_solution(s, 128);
  const auto segs = classify_arcs(s.model, ref).segments_of(0);
  ASSERT_EQ(segs.size(), 2u);
  const double tau = segs[0].end;
  const SwitchSequence seq{{ChannelSwitches{{tau}, {-1.0, 1.0}}}};
  const ControlPolicy p = seq.to_policy(0.0, 1.5, bounds_of(s.model));
  ASSERT_EQ(p.intervals(), 2);
  const ControlPolicy fine = p.refined({true, true}, 40);
  const ExtremalSolution e = evaluate_solution(s, fine);
  const ArcSegmentation seg = classify_arcs(s.model, e);
  for (int m = 0; m < fine.intervals(); ++m)
    EXPECT_EQ(seg.labels[0][static_cast<std::size_t>(m)], m < 40 ? ArcLabel::RegularMin : ArcLabel::RegularMax) << m;
  EXPECT_NEAR(seg.junctions.at(0).time, tau, 1e-12);
}

TEST(ClassifyArcs, ShortTransitionRunBecomesCorner) {
  const ProblemSpec s = tb::closed_two_level(1.5);
  const ExtremalSolution ref = best_solution(s, 128);
  // The solver's grid solution has at most a one-interval blend at the switch.
  const ArcSegmentation seg = classify_arcs(s.model, evaluate_solution(s, ref.policy));
  ASSERT_EQ(seg.junctions.size(), 1u);
  EXPECT_EQ(seg.junctions[0].type, JunctionType::Corner);
}

TEST(ClassifyArcs, RedundantChannelIsSingularNotAmbiguous) {
  const ProblemSpec s = tb::redundant_collision();
  const ExtremalSolution e = best_solution(s, 32, 2);
  const ArcSegmentation seg = classify_arcs(s.model, e);
  for (auto l : seg.labels[1]) EXPECT_EQ(l, ArcLabel::Singular);
  EXPECT_TRUE(seg.ambiguous_intervals.empty());
}

TEST(Theorem1, LongHorizonClosedProblemIsDegenerate) {
  const ProblemSpec s = tb::closed_two_level(6.0);
  const ExtremalSolution e = best_solution(s, 128);
  EXPECT_NEAR(e.objective, 1.0, 1e-8);
  const auto r = check_theorem1(s, e, classify_arcs(s.model, e));
  EXPECT_EQ(r.verdict, Verdict::Degenerate) << r.reason;
}

TEST(Theorem1, AbnormalProblemIsDegenerate) {
  TwoLevelParams p;
  p.observable = ComplexMatrix::Identity(2, 2);
  const QuantumModel m = build_two_level(p);
  const ProblemSpec s(m, TerminalMode{vectorize_state(tb::excited(), m.basis()), 1.0});
  const ExtremalSolution e = evaluate_solution(s, uniform_policy(m, 1.0, 16, RealVector::Constant(1, 0.2)));
  EXPECT_TRUE(e.abnormal);
  const auto r = check_theorem1(s, e, classify_arcs(m, e));
  EXPECT_EQ(r.verdict, Verdict::Degenerate);
}

TEST(Theorem1, PeriodicProblemNotApplicable) {
  const ProblemSpec s = tb::thermal_periodic(1.0);
  const ExtremalSolution e = evaluate_solution(s, uniform_policy(s.model, 1.0, 16, RealVector::Constant(1, 0.2)));
  EXPECT_EQ(check_theorem1(s, e, classify_arcs(s.model, e)).verdict, Verdict::NotApplicable);
}

TEST(BranchOrder, AdPowerCoefficientsMatchDirectEvaluation) {
  const ProblemSpec s = tb::random_lindblad(4, 1.0);
  const RealMatrix& l0 = s.model.drift().matrix();
  const RealMatrix& l1 = s.model.control(0).generator.matrix();
  const RealVector rho = s.initial_state().coefficients();
  const RealVector psi = RealVector::LinSpaced(9, 0.5, -0.7);
  const auto coeffs = ad_power_coefficients(psi, rho, l0, l1, 3);
  ASSERT_EQ(coeffs.size(), 3u);
  for (double alpha : {-0.8, 0.3, 1.7}) {
    const RealMatrix l = l0 + alpha * l1;
    RealMatrix x = linalg::commutator(l1, l0);
    for (std::size_t m = 0; m < 3; ++m) {
      x = linalg::commutator(l, x);
      double poly = 0.0, pw = 1.0;
      for (double c : coeffs[m]) {
        poly += c * pw;
        pw *= alpha;
      }
      EXPECT_NEAR(poly, psi.dot(x * rho), 1e-10 * (1.0 + std::abs(poly))) << "m = " << m + 1 << " alpha = " << alpha;
    }
  }
}

TEST(BranchOrder, ZeroCostateGivesMaximalOrder) {
  const ProblemSpec s = tb::random_lindblad(4, 1.0);
  EXPECT_EQ(estimate_branch_order(s.model, RealVector::Zero(9), s.initial_state().coefficients(), 0, RealVector::Zero(1)), 3);
  EXPECT_EQ(estimate_branch_order(s.model, RealVector::LinSpaced(9, 0.5, -0.7), s.initial_state().coefficients(), 0, RealVector::Zero(1)), 0);
}

TEST(Counting, RegularTerminatedBranchFreeIsEquality) {
  for (int n : {2, 3, 5})
    for (int spec_points : {0, 1, 4}) {
      StructureCounts c;
      c.dimension = n;
      c.special_points = spec_points;
      const CountResult r = count_parameters_constraints(c);
      EXPECT_EQ(r.p_total, spec_points + 2L * n * n);
      EXPECT_EQ(r.c_total, r.p_total);
      EXPECT_EQ(r.deficit(), 0);
      EXPECT_EQ(r.verdict(), "resolvable-equality");
    }
  StructureCounts free_t;
  free_t.special_points = 2;
  free_t.alpha = 1;
  EXPECT_EQ(count_parameters_constraints(free_t).deficit(), 0);
}

TEST(Counting, SingularTerminatingArcHasDeficitMinusOne) {
  StructureCounts c;
  c.dimension = 2;
  c.special_points = 1;
  c.beta = 1;
  const CountResult r = count_parameters_constraints(c);
  EXPECT_EQ(r.p_total, 9);
  EXPECT_EQ(r.c_total, 10);
  EXPECT_EQ(r.deficit(), -1);
  EXPECT_EQ(r.verdict(), "requires-constraint-redundancy");
  c.beta = 2;
  EXPECT_EQ(count_parameters_constraints(c).deficit(), -2);
}

TEST(Counting, AnyBranchPointLeavesADeficit) {
  for (int s = 1; s <= 4; ++s)
    for (int n_sing : {0, 1}) {
      StructureCounts c;
      c.dimension = 3;
      c.special_points = 2;
      c.branch_orders = {s};
      c.singular_branches = n_sing;
      const CountResult r = count_parameters_constraints(c);
      EXPECT_EQ(r.p_branch, s - 1);
      EXPECT_EQ(r.c_branch, (s + 1) * (s + 2) / 2 - 1);
      EXPECT_EQ(r.deficit(), (s - 1) - ((s + 1) * (s + 2) / 2 - 1) + n_sing);
      EXPECT_LT(r.deficit(), 0);
    }
}

TEST(Counting, InvalidStructuresRejected) {
  StructureCounts c;
  c.special_points = 1;
  c.branch_orders = {1, 1};
  EXPECT_THROW(count_parameters_constraints(c), Error);
  c.branch_orders = {0};
  EXPECT_THROW(count_parameters_constraints(c), Error);
  c.branch_orders = {};
  c.beta = 3;
  EXPECT_THROW(count_parameters_constraints(c), Error);
}

TEST(Counting, StructureCountsFromSegmentation) {
  ArcSegmentation seg;
  seg.segments = {{0, ArcLabel::RegularMax, 0.0, 0.4, 0, 3}, {0, ArcLabel::Singular, 0.4, 1.0, 4, 9}};
  Junction j;
  j.type = JunctionType::RegularToSingular;
  j.branch_order = 0;
  seg.junctions = {j};
  const StructureCounts c = structure_counts(seg, 2, false);
  EXPECT_EQ(c.special_points, 1);
  EXPECT_EQ(c.beta, 1);
  EXPECT_EQ(count_parameters_constraints(c).deficit(), -1);
}
