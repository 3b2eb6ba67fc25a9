#pragma once

// Real Liouville-space representation of operators on an N-level system.
//
// Every Hermitian operator A is identified with the real coefficient vector
// A_i = Tr[sigma_i A] in an orthonormal Hermitian basis {sigma_i}, and every
// Hermiticity-preserving superoperator L with the real matrix
// L_ij = Tr[sigma_i L(sigma_j)]. The basis starts with I/sqrt(N), so the trace
// functional <1| has a single nonzero coordinate.

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qpmp/core.hpp"
#include "qpmp/linalg.hpp"

namespace qpmp {

inline constexpr double kHermiticityTol = 1e-10;
inline constexpr double kPositivityTol = 1e-10;

class HermitianBasis {
 public:
  /// Identity/sqrt(N) followed by the N^2 - 1 generalized Gell-Mann matrices:
  /// for every pair j < k the symmetric and antisymmetric off-diagonal
  /// elements, then the N - 1 diagonal ones. All have unit Hilbert-Schmidt norm.
  explicit HermitianBasis(int dimension) : dimension_(dimension) {
    if (dimension < 2) fail(ErrorCode::InvalidDimension, "basis dimension must be >= 2, got " + std::to_string(dimension));
    const int n = dimension;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    elements_.reserve(static_cast<std::size_t>(n * n));
    elements_.push_back(ComplexMatrix::Identity(n, n) / std::sqrt(static_cast<double>(n)));
    for (int j = 0; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        ComplexMatrix sym = ComplexMatrix::Zero(n, n);
        sym(j, k) = inv_sqrt2;
        sym(k, j) = inv_sqrt2;
        elements_.push_back(sym);
        ComplexMatrix anti = ComplexMatrix::Zero(n, n);
        anti(j, k) = Complex(0.0, -inv_sqrt2);
        anti(k, j) = Complex(0.0, inv_sqrt2);
        elements_.push_back(anti);
      }
    }
    for (int l = 1; l < n; ++l) {
      ComplexMatrix diag = ComplexMatrix::Zero(n, n);
      const double norm = 1.0 / std::sqrt(static_cast<double>(l) * (l + 1));
      for (int j = 0; j < l; ++j) diag(j, j) = norm;
      diag(l, l) = -l * norm;
      elements_.push_back(diag);
    }
    identity_ = RealVector::Zero(n * n);
    identity_(0) = std::sqrt(static_cast<double>(n));
  }

  int dimension() const noexcept { return dimension_; }
  int size() const noexcept { return dimension_ * dimension_; }
  const ComplexMatrix& element(int i) const { return elements_.at(static_cast<std::size_t>(i)); }
  const std::vector<ComplexMatrix>& elements() const noexcept { return elements_; }

  /// Coefficients of the identity operator, i.e. the trace functional <1|.
  const RealVector& identity() const noexcept { return identity_; }

  /// Tr[sigma_i A] for every basis element; real part only.
  RealVector coefficients_of(const ComplexMatrix& a) const {
    RealVector out(size());
    for (int i = 0; i < size(); ++i) {
      // Tr[S A] = sum_ab S_ab A_ba
      out(i) = (elements_[static_cast<std::size_t>(i)].transpose().cwiseProduct(a)).sum().real();
    }
    return out;
  }

  ComplexMatrix matrix_of(const RealVector& coeffs) const {
    ComplexMatrix out = ComplexMatrix::Zero(dimension_, dimension_);
    for (int i = 0; i < size(); ++i) out += coeffs(i) * elements_[static_cast<std::size_t>(i)];
    return out;
  }

  RealMatrix gram() const {
    RealMatrix g(size(), size());
    for (int i = 0; i < size(); ++i)
      for (int j = 0; j < size(); ++j)
        g(i, j) = (elements_[static_cast<std::size_t>(i)] * elements_[static_cast<std::size_t>(j)]).trace().real();
    return g;
  }

 private:
  int dimension_;
  std::vector<ComplexMatrix> elements_;
  RealVector identity_;
};

using BasisPtr = std::shared_ptr<const HermitianBasis>;

inline BasisPtr build_hermitian_basis(int dimension) { return std::make_shared<const HermitianBasis>(dimension); }

inline double antihermitian_norm(const ComplexMatrix& a) { return (0.5 * (a - a.adjoint())).norm(); }

inline void require_hermitian(const ComplexMatrix& a, const char* what) {
  if (a.rows() != a.cols()) fail(ErrorCode::Shape, std::string(what) + " is not square");
  const double defect = antihermitian_norm(a);
  if (defect > kHermiticityTol)
    fail(ErrorCode::Hermiticity, std::string(what) + " is not Hermitian (anti-Hermitian norm " + std::to_string(defect) + ")");
}

inline void require_dimension(const ComplexMatrix& a, const HermitianBasis& basis, const char* what) {
  if (a.rows() != basis.dimension() || a.cols() != basis.dimension())
    fail(ErrorCode::Shape, std::string(what) + " is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                               ", basis dimension is " + std::to_string(basis.dimension()));
}

/// Real coefficient vector of a Hermitian operator (state, observable or costate).
class LiouvilleVector {
 public:
  LiouvilleVector(BasisPtr basis, RealVector coefficients) : basis_(std::move(basis)), coeffs_(std::move(coefficients)) {
    if (!basis_) fail(ErrorCode::Shape, "LiouvilleVector without basis");
    if (coeffs_.size() != basis_->size())
      fail(ErrorCode::Shape, "coefficient vector length " + std::to_string(coeffs_.size()) + " does not match N^2 = " +
                                 std::to_string(basis_->size()));
  }

  const RealVector& coefficients() const noexcept { return coeffs_; }
  const BasisPtr& basis() const noexcept { return basis_; }
  Eigen::Index size() const noexcept { return coeffs_.size(); }
  double operator[](Eigen::Index i) const { return coeffs_(i); }

  double dot(const LiouvilleVector& other) const {
    require_same_basis(other);
    return coeffs_.dot(other.coeffs_);
  }
  /// <1|v>, the trace of the represented operator.
  double trace() const { return basis_->identity().dot(coeffs_); }
  ComplexMatrix to_matrix() const { return basis_->matrix_of(coeffs_); }

  LiouvilleVector operator+(const LiouvilleVector& o) const {
    require_same_basis(o);
    return {basis_, coeffs_ + o.coeffs_};
  }
  LiouvilleVector operator-(const LiouvilleVector& o) const {
    require_same_basis(o);
    return {basis_, coeffs_ - o.coeffs_};
  }
  LiouvilleVector operator*(double s) const { return {basis_, coeffs_ * s}; }

  void require_same_basis(const LiouvilleVector& o) const {
    if (o.basis_->dimension() != basis_->dimension()) fail(ErrorCode::Shape, "Liouville vectors live in different bases");
  }

 private:
  BasisPtr basis_;
  RealVector coeffs_;
};

inline LiouvilleVector vectorize(const ComplexMatrix& op, const BasisPtr& basis) {
  require_dimension(op, *basis, "operator");
  require_hermitian(op, "operator");
  return {basis, basis->coefficients_of(op)};
}

inline ComplexMatrix devectorize(const LiouvilleVector& v) { return v.to_matrix(); }

inline LiouvilleVector identity_vector(const BasisPtr& basis) { return {basis, basis->identity()}; }

/// Validates trace one, Hermiticity and positivity (min eigenvalue >= -tol).
inline void require_density_matrix(const ComplexMatrix& rho, double tol = kPositivityTol) {
  require_hermitian(rho, "density matrix");
  const double tr = rho.trace().real();
  if (std::abs(tr - 1.0) > tol) fail(ErrorCode::StateValidity, "density matrix trace is " + std::to_string(tr));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  if (lo < -tol) fail(ErrorCode::StateValidity, "density matrix has negative eigenvalue " + std::to_string(lo));
}

inline LiouvilleVector vectorize_state(const ComplexMatrix& rho, const BasisPtr& basis) {
  require_dimension(rho, *basis, "density matrix");
  require_density_matrix(rho);
  return vectorize(rho, basis);
}

/// Smallest eigenvalue of the operator represented by `v`.
inline double min_eigenvalue(const LiouvilleVector& v) {
  const ComplexMatrix m = v.to_matrix();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Real N^2 x N^2 matrix of a Hermiticity-preserving superoperator.
class Superoperator {
 public:
  Superoperator(BasisPtr basis, RealMatrix matrix) : basis_(std::move(basis)), matrix_(std::move(matrix)) {
    if (!basis_) fail(ErrorCode::Shape, "Superoperator without basis");
    if (matrix_.rows() != basis_->size() || matrix_.cols() != basis_->size())
      fail(ErrorCode::Shape, "superoperator matrix must be N^2 x N^2");
  }

  static Superoperator zero(const BasisPtr& basis) {
    return {basis, RealMatrix::Zero(basis->size(), basis->size())};
  }

  const RealMatrix& matrix() const noexcept { return matrix_; }
  const BasisPtr& basis() const noexcept { return basis_; }

  LiouvilleVector apply(const LiouvilleVector& v) const {
    if (v.basis()->dimension() != basis_->dimension()) fail(ErrorCode::Shape, "vector and superoperator bases differ");
    return {basis_, matrix_ * v.coefficients()};
  }

  /// Norm of the row <1|L; zero for trace-preserving generators.
  double trace_row_norm() const { return (basis_->identity().transpose() * matrix_).norm(); }

  Superoperator operator+(const Superoperator& o) const { return {basis_, matrix_ + o.matrix_}; }
  Superoperator operator-(const Superoperator& o) const { return {basis_, matrix_ - o.matrix_}; }
  Superoperator operator*(double s) const { return {basis_, matrix_ * s}; }

 private:
  BasisPtr basis_;
  RealMatrix matrix_;
};

using OperatorMap = std::function<ComplexMatrix(const ComplexMatrix&)>;

/// L_ij = Tr[sigma_i L(sigma_j)] for an arbitrary Hermiticity-preserving map.
inline Superoperator superop_from_action(const OperatorMap& action, const BasisPtr& basis) {
  const int d = basis->size();
  RealMatrix m(d, d);
  for (int j = 0; j < d; ++j) m.col(j) = basis->coefficients_of(action(basis->element(j)));
  return {basis, m};
}

/// rho -> -i[H, rho] (hbar = 1, H in angular-frequency units).
inline Superoperator hamiltonian_superop(const ComplexMatrix& hamiltonian, const BasisPtr& basis) {
  require_dimension(hamiltonian, *basis, "Hamiltonian");
  require_hermitian(hamiltonian, "Hamiltonian");
  const Complex mi(0.0, -1.0);
  return superop_from_action([&](const ComplexMatrix& x) -> ComplexMatrix { return mi * linalg::commutator(hamiltonian, x); },
                             basis);
}

/// rho -> rate * (J rho J^+ - {J^+ J, rho}/2).
inline Superoperator lindblad_superop(const ComplexMatrix& jump, double rate, const BasisPtr& basis) {
  if (rate < 0.0 || std::isnan(rate)) fail(ErrorCode::NegativeRate, "Lindblad rate must be >= 0, got " + std::to_string(rate));
  require_dimension(jump, *basis, "jump operator");
  const ComplexMatrix jd = jump.adjoint();
  const ComplexMatrix jdj = jd * jump;
  return superop_from_action(
      [&](const ComplexMatrix& x) -> ComplexMatrix { return rate * (jump * x * jd - 0.5 * (jdj * x + x * jdj)); }, basis);
}

/// Collision channel rho -> target - rho, stored as -I + |target><1|.
/// On trace-one vectors this is exactly the affine map; as a matrix it also
/// annihilates <1| from the left on the whole space.
inline Superoperator collision_superop(const ComplexMatrix& target, const BasisPtr& basis) {
  require_dimension(target, *basis, "collision target");
  require_density_matrix(target);
  const RealVector t = basis->coefficients_of(target);
  RealMatrix m = -RealMatrix::Identity(basis->size(), basis->size());
  m += t * basis->identity().transpose();
  return {basis, m};
}

enum class ChannelKind { Coherent, Collision, Generic };

inline const char* to_string(ChannelKind k) {
  switch (k) {
    case ChannelKind::Coherent: return "coherent";
    case ChannelKind::Collision: return "collision";
    case ChannelKind::Generic: return "generic";
  }
  return "generic";
}

struct ControlChannel {
  std::string name;
  Superoperator generator;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  ChannelKind kind = ChannelKind::Generic;
  std::string units;
  /// Control Hamiltonian for coherent channels (generator = -i[H, .]).
  std::optional<ComplexMatrix> hamiltonian;
  /// Equilibrium state of a collision channel.
  std::optional<LiouvilleVector> collision_target;

  bool bounded() const { return std::isfinite(lower) && std::isfinite(upper); }
};

inline ControlChannel coherent_channel(std::string name, const ComplexMatrix& h, const BasisPtr& basis, double lower,
                                       double upper, std::string units = {}) {
  ControlChannel c{std::move(name), hamiltonian_superop(h, basis), lower, upper, ChannelKind::Coherent, std::move(units), h,
                   std::nullopt};
  return c;
}

inline ControlChannel collision_channel(std::string name, const ComplexMatrix& target, const BasisPtr& basis, double lower,
                                        double upper, std::string units = {}) {
  ControlChannel c{std::move(name), collision_superop(target, basis), lower, upper, ChannelKind::Collision, std::move(units),
                   std::nullopt, vectorize(target, basis)};
  return c;
}

/// Drift generator, bounded control channels and the objective observable.
class QuantumModel {
 public:
  QuantumModel(BasisPtr basis, Superoperator drift, std::vector<ControlChannel> controls, LiouvilleVector observable,
               std::optional<ComplexMatrix> drift_hamiltonian = std::nullopt)
      : basis_(std::move(basis)),
        drift_(std::move(drift)),
        controls_(std::move(controls)),
        observable_(std::move(observable)),
        drift_hamiltonian_(std::move(drift_hamiltonian)) {
    if (drift_.basis() != basis_) fail(ErrorCode::Shape, "drift uses a different basis");
    if (observable_.basis() != basis_) fail(ErrorCode::Shape, "observable uses a different basis");
    for (std::size_t k = 0; k < controls_.size(); ++k) {
      const auto& c = controls_[k];
      if (c.generator.basis() != basis_) fail(ErrorCode::Shape, "control '" + c.name + "' uses a different basis");
      if (std::isnan(c.lower) || std::isnan(c.upper) || c.lower > c.upper)
        fail(ErrorCode::Config, "control channel " + std::to_string(k + 1) + " ('" + c.name + "') has u_min > u_max (" +
                                    std::to_string(c.lower) + " > " + std::to_string(c.upper) + ")");
    }
  }

  const BasisPtr& basis() const noexcept { return basis_; }
  int dimension() const noexcept { return basis_->dimension(); }
  const Superoperator& drift() const noexcept { return drift_; }
  const std::vector<ControlChannel>& controls() const noexcept { return controls_; }
  const ControlChannel& control(std::size_t k) const { return controls_.at(k); }
  std::size_t channel_count() const noexcept { return controls_.size(); }
  const LiouvilleVector& observable() const noexcept { return observable_; }
  const std::optional<ComplexMatrix>& drift_hamiltonian() const noexcept { return drift_hamiltonian_; }

  /// Closed system: drift and every control are Hamiltonian commutators.
  bool closed() const {
    if (!drift_hamiltonian_) return false;
    // A dissipative drift may still record its Hamiltonian part.
    const RealMatrix& d = drift_.matrix();
    if ((d + d.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, d.cwiseAbs().maxCoeff())) return false;
    for (const auto& c : controls_)
      if (!c.hamiltonian) return false;
    return true;
  }

  QuantumModel with_observable(LiouvilleVector o) const {
    QuantumModel m = *this;
    if (o.basis() != basis_) fail(ErrorCode::Shape, "observable uses a different basis");
    m.observable_ = std::move(o);
    return m;
  }

  QuantumModel with_bounds(std::size_t k, double lower, double upper) const {
    QuantumModel m = *this;
    if (k >= m.controls_.size()) fail(ErrorCode::Config, "no control channel " + std::to_string(k + 1));
    if (std::isnan(lower) || std::isnan(upper) || lower > upper)
      fail(ErrorCode::Config, "control channel " + std::to_string(k + 1) + " ('" + m.controls_[k].name + "') has u_min > u_max (" +
                                  std::to_string(lower) + " > " + std::to_string(upper) + ")");
    m.controls_[k].lower = lower;
    m.controls_[k].upper = upper;
    return m;
  }

  /// L0 + sum_k u_k L_k.
  template <typename Values>
  RealMatrix generator(const Values& u) const {
    RealMatrix g = drift_.matrix();
    for (std::size_t k = 0; k < controls_.size(); ++k) {
      const double uk = u[static_cast<Eigen::Index>(k)];
      if (uk != 0.0) g.noalias() += uk * controls_[k].generator.matrix();
    }
    return g;
  }

 private:
  BasisPtr basis_;
  Superoperator drift_;
  std::vector<ControlChannel> controls_;
  LiouvilleVector observable_;
  std::optional<ComplexMatrix> drift_hamiltonian_;
};

}  // namespace qpmp
