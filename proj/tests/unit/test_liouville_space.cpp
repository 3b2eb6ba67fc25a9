#include <random>

#include <gtest/gtest.h>

#include "qpmp/qpmp.hpp"

using namespace qpmp;

TEST(HermitianBasis, GramIsIdentityUpToN8) {
  for (int n = 2; n <= 8; ++n) {
    const HermitianBasis b(n);
    EXPECT_LT((b.gram() - RealMatrix::Identity(n * n, n * n)).cwiseAbs().maxCoeff(), 1e-12) << "N = " << n;
  }
}

TEST(HermitianBasis, FirstElementIsScaledIdentity) {
  const HermitianBasis b(4);
  EXPECT_LT((b.element(0) - ComplexMatrix::Identity(4, 4) / 2.0).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(b.identity()(0), 2.0);
  EXPECT_EQ(b.identity().tail(15).cwiseAbs().maxCoeff(), 0.0);
  for (int i = 1; i < 16; ++i) EXPECT_NEAR(std::abs(b.element(i).trace()), 0.0, 1e-15);
}

TEST(HermitianBasis, RejectsDimensionBelowTwo) {
  try {
    HermitianBasis b(1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidDimension);
  }
}

TEST(LiouvilleVector, RoundTripOfRandomHermitian) {
  std::mt19937_64 rng(3);
  for (int n = 2; n <= 5; ++n) {
    auto basis = build_hermitian_basis(n);
    const ComplexMatrix a = random_hermitian(n, rng);
    const LiouvilleVector v = vectorize(a, basis);
    EXPECT_LT((v.to_matrix() - a).norm(), 1e-13);
    // Hilbert-Schmidt products are Euclidean products of the real coefficients.
    const ComplexMatrix c = random_hermitian(n, rng);
    EXPECT_NEAR(v.dot(vectorize(c, basis)), (a * c).trace().real(), 1e-12);
  }
}

TEST(LiouvilleVector, RejectsNonHermitianAndWrongShape) {
  auto basis = build_hermitian_basis(2);
  ComplexMatrix a = ComplexMatrix::Zero(2, 2);
  a(0, 1) = 1.0;
  try {
    vectorize(a, basis);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Hermiticity);
  }
  try {
    vectorize(ComplexMatrix::Identity(3, 3), basis);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Shape);
  }
}

TEST(LiouvilleVector, StateValidation) {
  auto basis = build_hermitian_basis(2);
  ComplexMatrix r = ComplexMatrix::Zero(2, 2);
  r(0, 0) = 1.2;
  r(1, 1) = -0.2;
  try {
    vectorize_state(r, basis);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StateValidity);
  }
  EXPECT_NEAR(vectorize_state(thermal_state(0.3), basis).trace(), 1.0, 1e-15);
}

TEST(Superoperator, TraceRowsVanish) {
  std::mt19937_64 rng(5);
  for (int n = 2; n <= 5; ++n) {
    auto basis = build_hermitian_basis(n);
    const ComplexMatrix h = random_hermitian(n, rng);
    ComplexMatrix l = ComplexMatrix::Random(n, n);
    EXPECT_LT(hamiltonian_superop(h, basis).trace_row_norm(), 1e-11);
    EXPECT_LT(lindblad_superop(l, 0.7, basis).trace_row_norm(), 1e-11);
    EXPECT_LT(collision_superop(random_density(n, rng), basis).trace_row_norm(), 1e-11);
  }
}

TEST(Superoperator, HamiltonianGeneratorIsAntisymmetric) {
  std::mt19937_64 rng(9);
  auto basis = build_hermitian_basis(3);
  const RealMatrix m = hamiltonian_superop(random_hermitian(3, rng), basis).matrix();
  EXPECT_LT((m + m.transpose()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Superoperator, MatchesDirectAction) {
  std::mt19937_64 rng(11);
  const int n = 3;
  auto basis = build_hermitian_basis(n);
  const ComplexMatrix h = random_hermitian(n, rng);
  const ComplexMatrix j = ComplexMatrix::Random(n, n);
  const ComplexMatrix rho = random_density(n, rng);
  const Superoperator l = hamiltonian_superop(h, basis) + lindblad_superop(j, 0.4, basis);
  const ComplexMatrix direct = Complex(0, -1) * (h * rho - rho * h) + 0.4 * (j * rho * j.adjoint() - 0.5 * (j.adjoint() * j * rho + rho * j.adjoint() * j));
  EXPECT_LT((l.apply(vectorize(rho, basis)).to_matrix() - direct).norm(), 1e-12);
}

TEST(Superoperator, CollisionIsAffineResetOnStates) {
  std::mt19937_64 rng(13);
  auto basis = build_hermitian_basis(3);
  const ComplexMatrix target = random_density(3, rng);
  const ComplexMatrix rho = random_density(3, rng);
  const Superoperator c = collision_superop(target, basis);
  EXPECT_LT((c.apply(vectorize(rho, basis)).to_matrix() - (target - rho)).norm(), 1e-13);
}

TEST(Superoperator, NegativeRateRejected) {
  auto basis = build_hermitian_basis(2);
  try {
    lindblad_superop(pauli_x(), -0.1, basis);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NegativeRate);
  }
}

TEST(QuantumModel, InvertedBoundsNameTheChannel) {
  auto basis = build_hermitian_basis(2);
  std::vector<ControlChannel> ch{coherent_channel("drive", pauli_x(), basis, 1.0, -1.0)};
  try {
    QuantumModel m(basis, Superoperator::zero(basis), ch, vectorize(pauli_z(), basis));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
    EXPECT_NE(std::string(e.what()).find("drive"), std::string::npos);
  }
}

TEST(QuantumModel, GeneratorIsAffineInControls) {
  TwoLevelParams p;
  const QuantumModel m = build_two_level(p);
  RealVector u(1);
  u << 0.3;
  const RealMatrix g = m.generator(u);
  EXPECT_LT((g - m.drift().matrix() - 0.3 * m.control(0).generator.matrix()).norm(), 1e-15);
  EXPECT_TRUE(m.closed());
}
