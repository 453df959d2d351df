#pragma once

#include <cstdint>
#include <memory>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "rwspatial/graph.hpp"
#include "rwspatial/rng.hpp"

namespace rwspatial {

/// P = QQ', symmetrized as (P + P')/2 to remove roundoff asymmetry.
SparseMatrix stationary_precision(const GeneratorMatrix& q);

/// Log of the product of the nonzero eigenvalues of a PSD matrix whose null
/// space is spanned by 1. Throws PreconditionError if P1 != 0, and
/// RankDeficiencyError if more than one eigenvalue is below 1e-10 times the
/// largest.
double log_pseudo_det(const SparseMatrix& p);
double log_pseudo_det(const Eigen::MatrixXd& p);

/// log det(U'PU) for an orthonormal basis U of {x : 1'x = 0}: the
/// determinant that normalizes a Gaussian with precision P restricted to the
/// sum-zero subspace. Equals log_pseudo_det(P) when P1 = 0. For a directed
/// generator QQ'1 = Q(Q'1) is generally nonzero (the null vector of QQ' is
/// the stationary distribution), and only this form gives a proper density.
/// Throws RankDeficiencyError if U'PU has an eigenvalue below 1e-10 times
/// the largest.
double log_det_sum_zero(const SparseMatrix& p);
double log_det_sum_zero(const Eigen::MatrixXd& p);

/// Solves Q'pi = r - mean(r) subject to 1'pi = 0.
///
/// This is the Bott-Duffin constrained inverse of Q' applied to r. The
/// bordered system [[Q', 1], [1', 0]] [pi; lambda] = [r~; 0] is factorized
/// once (sparse LU) and reused for every right-hand side.
class ConstrainedSolver {
 public:
  explicit ConstrainedSolver(const GeneratorMatrix& q);
  ~ConstrainedSolver();
  ConstrainedSolver(ConstrainedSolver&&) noexcept;
  ConstrainedSolver& operator=(ConstrainedSolver&&) noexcept;

  std::size_t dimension() const noexcept { return dim_; }
  Eigen::VectorXd solve(const Eigen::VectorXd& r) const;

 private:
  struct Factorization;
  std::size_t dim_;
  SparseMatrix qt_;
  std::unique_ptr<Factorization> lu_;
};

/// One-shot form of ConstrainedSolver.
Eigen::VectorXd constrained_solve(const GeneratorMatrix& q, const Eigen::VectorXd& r);

/// Stationary law of dz/dt = -Q'z + gamma, gamma ~ N(0, sigma^2 I), 1'gamma = 0:
///   pi ~ N(0, sigma^2 (QQ')^-) restricted to 1'pi = 0.
///
/// Immutable; precision, its log determinant on the sum-zero subspace and
/// the bordered factorization are computed on construction.
class IntrinsicField {
 public:
  IntrinsicField(GeneratorMatrix q, double sigma = 1.0);

  const GeneratorMatrix& generator() const noexcept { return q_; }
  double sigma() const noexcept { return sigma_; }
  std::size_t dimension() const noexcept { return q_.dimension(); }
  const SparseMatrix& precision() const noexcept { return p_; }
  /// log_det_sum_zero(precision())
  double log_det() const noexcept { return log_det_; }
  const ConstrainedSolver& solver() const noexcept { return *solver_; }

 private:
  GeneratorMatrix q_;
  double sigma_;
  SparseMatrix p_;
  double log_det_;
  std::shared_ptr<const ConstrainedSolver> solver_;
};

struct FieldSample {
  Eigen::VectorXd pi;
  std::uint64_t seed = 0;
};

/// Draws gamma ~ N(0, sigma^2 I), removes its mean and solves Q'pi = gamma.
FieldSample sample_field(const IntrinsicField& field, std::uint64_t seed);
/// Same, drawing from a caller-owned stream.
Eigen::VectorXd sample_field(const IntrinsicField& field, Rng& rng);

/// Density of pi on the sum-zero subspace:
///   -(M-1)/2 log(2 pi sigma^2) + 1/2 log det(U'QQ'U) - pi'QQ'pi / (2 sigma^2).
double log_density(const Eigen::VectorXd& pi, const IntrinsicField& field);

/// Samples x ~ N(A^{-1} b, A^{-1}) conditioned on 1'x = 0, with
/// A = base + diag(d) for a fixed sparse PSD base (typically QQ') and a
/// nonnegative diagonal d that changes between draws.
///
/// The symbolic Cholesky analysis is done once; each draw factorizes,
/// samples the unconstrained Gaussian, then applies the kriging correction
///   x <- x - A^{-1}1 (1'x) / (1'A^{-1}1).
class ConstrainedGaussianSampler {
 public:
  explicit ConstrainedGaussianSampler(const SparseMatrix& base);
  ~ConstrainedGaussianSampler();
  ConstrainedGaussianSampler(ConstrainedGaussianSampler&&) noexcept;
  ConstrainedGaussianSampler& operator=(ConstrainedGaussianSampler&&) noexcept;

  /// Replace the base matrix; must keep the original sparsity pattern.
  void set_base(const SparseMatrix& base);
  Eigen::VectorXd draw(const Eigen::VectorXd& diag, const Eigen::VectorXd& linear, Rng& rng);
  /// Posterior mean under the constraint (no noise); used by tests.
  Eigen::VectorXd constrained_mean(const Eigen::VectorXd& diag, const Eigen::VectorXd& linear);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rwspatial
