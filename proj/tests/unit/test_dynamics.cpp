#include <random>

#include <gtest/gtest.h>

#include "../testbeds.hpp"

using namespace qpmp;
namespace tb = qpmp::testbeds;

namespace {

double population(const LiouvilleVector& v, int level) { return v.to_matrix()(level, level).real(); }

}  // namespace

TEST(Propagation, RabiOscillation) {
  // H = (omega/2) sigma_x from |0>: P_1(t) = sin^2(omega t / 2).
  const double omega = 2.3;
  auto basis = build_hermitian_basis(2);
  std::vector<ControlChannel> ch{coherent_channel("x", pauli_x(), basis, -10, 10)};
  const QuantumModel m(basis, Superoperator::zero(basis), ch, vectorize(pauli_z(), basis));
  const ControlPolicy p = ControlPolicy::uniform(0.0, 3.0, 40, bounds_of(m), RealVector::Constant(1, omega / 2));
  const Trajectory tr = propagate_state(m, p, vectorize_state(tb::ground(), basis));
  for (std::size_t i = 0; i < tr.nodes(); ++i)
    EXPECT_NEAR(population(tr.state(i), 1), std::pow(std::sin(omega * tr.times[i] / 2), 2), 1e-9);
}

TEST(Propagation, ExponentialDecay) {
  const double gamma = 0.8;
  auto basis = build_hermitian_basis(2);
  const QuantumModel m(basis, lindblad_superop(ket_bra(2, 0, 1), gamma, basis), {}, vectorize(pauli_z(), basis));
  const ControlPolicy p = ControlPolicy::uniform(0.0, 4.0, 25, {}, RealVector(0));
  const Trajectory tr = propagate_state(m, p, vectorize_state(tb::excited(), basis));
  for (std::size_t i = 0; i < tr.nodes(); ++i) {
    EXPECT_NEAR(population(tr.state(i), 1), std::exp(-gamma * tr.times[i]), 1e-9);
    EXPECT_NEAR(tr.state(i).trace(), 1.0, 1e-12);
  }
}

TEST(Propagation, CollisionChannelRelaxesExponentially) {
  auto basis = build_hermitian_basis(2);
  std::vector<ControlChannel> ch{collision_channel("c", tb::plus(), basis, 0.0, 3.0)};
  const QuantumModel m(basis, Superoperator::zero(basis), ch, vectorize(pauli_x(), basis));
  const ControlPolicy p = ControlPolicy::uniform(0.0, 2.0, 10, bounds_of(m), RealVector::Constant(1, 1.7));
  const Trajectory tr = propagate_state(m, p, vectorize_state(tb::excited(), basis));
  for (std::size_t i = 0; i < tr.nodes(); ++i) {
    const double e = std::exp(-1.7 * tr.times[i]);
    EXPECT_LT((tr.state(i).to_matrix() - (e * tb::excited() + (1 - e) * tb::plus())).norm(), 1e-12);
  }
}

TEST(Propagation, RandomLindbladKeepsTraceAndPositivity) {
  const ProblemSpec s = tb::random_lindblad(21, 3.0, 4);
  std::mt19937_64 rng(2);
  SolverConfig cfg;
  cfg.intervals = 30;
  const ControlPolicy p = random_policy(s, cfg, rng);
  const Trajectory tr = propagate_state(s.model, p, s.initial_state());
  for (std::size_t i = 0; i < tr.nodes(); ++i) {
    EXPECT_NEAR(tr.state(i).trace(), 1.0, 1e-11);
    EXPECT_GT(min_eigenvalue(tr.state(i)), -1e-10);
  }
}

TEST(Costate, NormalizationIsConserved) {
  const ProblemSpec s = tb::thermal_two_level(2.0);
  std::mt19937_64 rng(4);
  SolverConfig cfg;
  cfg.intervals = 32;
  const ExtremalSolution e = evaluate_solution(s, random_policy(s, cfg, rng));
  for (std::size_t i = 0; i < e.trajectory.nodes(); ++i) EXPECT_NEAR(e.trajectory.costates[i].dot(e.trajectory.states[i]), 0.0, 1e-12);
  EXPECT_LT(e.residuals.normalization, 1e-12);
}

TEST(Gradient, AdjointMatchesCentralDifferences) {
  const std::vector<ProblemSpec> specs{tb::thermal_two_level(2.0), tb::random_lindblad(3, 1.5), tb::two_collision(1.0),
                                       tb::thermal_periodic(1.3)};
  for (const auto& s : specs) {
    std::mt19937_64 rng(8);
    SolverConfig cfg;
    cfg.intervals = 12;
    const ControlPolicy p = random_policy(s, cfg, rng);
    const RealMatrix g = adjoint_gradient(s, p);
    for (int k = 0; k < p.channels(); ++k)
      for (int m = 0; m < p.intervals(); m += 3) {
        const double h = 1e-5;
        RealMatrix up = p.values(), dn = p.values();
        up(k, m) += h;
        dn(k, m) -= h;
        const std::vector<ChannelBounds> free(static_cast<std::size_t>(p.channels()));
        const double fd = (objective_value(s, ControlPolicy(p.nodes(), up, free)) - objective_value(s, ControlPolicy(p.nodes(), dn, free))) / (2 * h);
        EXPECT_LT(std::abs(fd - g(k, m)), 1e-5 * std::max(1e-3, std::abs(g.maxCoeff()))) << "k=" << k << " m=" << m;
      }
  }
}

TEST(Pointwise, SwitchingFunctionIsControlDerivativeOfPontryagin) {
  const ProblemSpec s = tb::random_lindblad(5, 1.0);
  std::mt19937_64 rng(1);
  const RealVector psi = RealVector::Random(9), rho = s.initial_state().coefficients();
  RealVector u(1);
  u << 0.2;
  RealVector u2 = u;
  u2(0) += 1e-6;
  const double fd = (pontryagin_function(psi, rho, s.model, u2) - pontryagin_function(psi, rho, s.model, u)) / 1e-6;
  EXPECT_NEAR(fd, switching_function(psi, rho, s.model, 0), 1e-7);
}

TEST(Pointwise, SingularControlZeroesSecondDerivative) {
  // Project a random costate so that K_u = dK_u/dt = 0, then hold u at the
  // singular value and differentiate K_u(t) twice numerically.
  const ProblemSpec s = tb::random_lindblad(6, 1.0);
  const RealMatrix& lk = s.model.control(0).generator.matrix();
  const RealMatrix& l0 = s.model.drift().matrix();
  const RealVector rho = s.initial_state().coefficients();
  RealMatrix cons(9, 2);
  cons.col(0) = lk * rho;
  cons.col(1) = linalg::commutator(lk, l0) * rho;
  const Eigen::HouseholderQR<RealMatrix> qr(cons);
  const RealMatrix q = qr.householderQ() * RealMatrix::Identity(9, 2);
  RealVector psi = RealVector::LinSpaced(9, -1.0, 1.3);
  psi -= q * (q.transpose() * psi);
  RealVector u = RealVector::Zero(1);
  const SingularControl sc = singular_control_value(psi, rho, s.model, 0, u);
  ASSERT_FALSE(sc.branch_point);
  u(0) = sc.value;
  const RealMatrix l = s.model.generator(u);
  auto k_at = [&](double t) {
    const RealMatrix e = linalg::expm(t * l);
    return (linalg::expm(-t * l).transpose() * psi).dot(lk * (e * rho));
  };
  // Richardson-extrapolated second difference removes the O(h^2) term.
  auto d2 = [&](double h) { return (k_at(h) - 2 * k_at(0) + k_at(-h)) / (h * h); };
  EXPECT_NEAR((4 * d2(5e-4) - d2(1e-3)) / 3, 0.0, 1e-6);
  EXPECT_NEAR(switching_derivatives(psi, rho, s.model, 0, u).second(sc.value), 0.0, 1e-12);
}

TEST(Pointwise, SwitchingRateMatchesTimeDerivative) {
  // d/dt <psi|L_k|rho> along the frozen generator equals the commutator formula.
  const ProblemSpec s = tb::random_lindblad(12, 1.0);
  RealVector u(1);
  u << 0.4;
  const RealMatrix l = s.model.generator(u);
  const RealVector rho = s.initial_state().coefficients();
  const RealVector psi = RealVector::Random(9);
  const double dt = 1e-6;
  const RealVector rho_p = linalg::expm(dt * l) * rho, rho_m = linalg::expm(-dt * l) * rho;
  const RealVector psi_p = linalg::expm(-dt * l).transpose() * psi, psi_m = linalg::expm(dt * l).transpose() * psi;
  const double fd = (switching_function(psi_p, rho_p, s.model, 0) - switching_function(psi_m, rho_m, s.model, 0)) / (2 * dt);
  EXPECT_NEAR(fd, switching_derivatives(psi, rho, s.model, 0, u).first, 1e-7);
}

TEST(Pointwise, ClosedCriterionEqualsSwitchingFunction) {
  const ProblemSpec s = tb::closed_two_level(1.5);
  SolverConfig cfg;
  cfg.intervals = 64;
  cfg.starts = 1;
  const ExtremalSolution e = solve_multistart(s, cfg).front();
  for (std::size_t i = 0; i < e.trajectory.nodes(); i += 7) {
    const double c = closed_switching_criterion(s.model, e.trajectory.state(i), e.trajectory.costate(i), 0);
    EXPECT_NEAR(c, switching_function(e.trajectory.costates[i], e.trajectory.states[i], s.model, 0), 1e-9);
  }
}

TEST(Policy, RepetitionRescalingAndRefinementPreserveObjective) {
  const ProblemSpec s = tb::thermal_periodic(1.0);
  std::mt19937_64 rng(3);
  SolverConfig cfg;
  cfg.intervals = 16;
  const ControlPolicy p = random_policy(s, cfg, rng);
  const double j = objective_value(s, p);
  EXPECT_NEAR(objective_value(s.with_horizon(3.0), p.repeated(3)), j, 1e-12);
  EXPECT_NEAR(objective_value(s, p.refined(std::vector<bool>(16, true), 4)), j, 1e-12);
  EXPECT_EQ(p.rescaled(2.0).duration(), 2.0);
  EXPECT_EQ(p.locate(0.0), 0);
  EXPECT_EQ(p.locate(1.0), 15);
}

TEST(Policy, BoundViolationRejected) {
  const ProblemSpec s = tb::closed_two_level(1.0);
  try {
    ControlPolicy::uniform(0.0, 1.0, 4, bounds_of(s.model), RealVector::Constant(1, 2.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parameter);
  }
}
