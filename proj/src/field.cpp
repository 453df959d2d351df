#include "rwspatial/field.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "rwspatial/errors.hpp"

namespace rwspatial {

namespace {

constexpr double kNullTolerance = 1e-10;
constexpr std::size_t kDenseEigenLimit = 2000;

}  // namespace

SparseMatrix stationary_precision(const GeneratorMatrix& q) {
  const SparseMatrix& qs = q.sparse();
  SparseMatrix p = qs * SparseMatrix(qs.transpose());
  SparseMatrix sym = 0.5 * (p + SparseMatrix(p.transpose()));
  sym.makeCompressed();
  return sym;
}

double log_pseudo_det(const Eigen::MatrixXd& p) {
  const Eigen::Index m = p.rows();
  if (m != p.cols()) throw PreconditionError("log_pseudo_det needs a square matrix");
  if (m == 1) {
    // A 1x1 intrinsic precision is the zero matrix; the empty product is 1.
    return 0.0;
  }
  const double scale = p.cwiseAbs().maxCoeff();
  if ((p * Eigen::VectorXd::Ones(m)).cwiseAbs().maxCoeff() > kNullTolerance * std::max(scale, 1.0)) {
    throw PreconditionError("P*1 != 0, so 1 is not the null vector; use log_det_sum_zero");
  }
  if (static_cast<std::size_t>(m) > kDenseEigenLimit) {
    // logdet(P + 11'/M) = logpdet(P) when P1 = 0.
    Eigen::MatrixXd shifted = p;
    shifted.array() += 1.0 / static_cast<double>(m);
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) {
      throw RankDeficiencyError("shifted precision is not positive definite (reducible graph?)");
    }
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd& ev = eig.eigenvalues();  // ascending
  const double largest = ev[m - 1];
  if (!(largest > 0.0)) throw RankDeficiencyError("precision matrix is zero");
  const double tol = kNullTolerance * largest;
  Eigen::Index near_zero = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(ev[i]) <= tol) ++near_zero;
  }
  if (near_zero > 1) {
    std::ostringstream os;
    os << near_zero << " near-zero eigenvalues; precision has rank < M-1 (reducible graph)";
    throw RankDeficiencyError(os.str());
  }
  if (near_zero == 0) {
    throw PreconditionError("matrix has no null direction; expected P*1 = 0");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(ev[i]) > tol) acc += std::log(ev[i]);
  }
  return acc;
}

double log_pseudo_det(const SparseMatrix& p) { return log_pseudo_det(Eigen::MatrixXd(p)); }

double log_det_sum_zero(const Eigen::MatrixXd& p) {
  const Eigen::Index m = p.rows();
  if (m != p.cols()) throw PreconditionError("log_det_sum_zero needs a square matrix");
  if (m == 1) return 0.0;  // the subspace is {0}
  // Householder reflection H swapping e_1 and 1/sqrt(M); columns 2..M of H
  // span the sum-zero subspace, so U'PU is HPH without its first row/column.
  Eigen::VectorXd w = Eigen::VectorXd::Constant(m, -1.0 / std::sqrt(static_cast<double>(m)));
  w[0] += 1.0;
  const double c = 2.0 / w.squaredNorm();
  const Eigen::VectorXd pw = p * w;
  Eigen::MatrixXd hph = p;
  hph.noalias() -= c * w * pw.transpose();
  hph.noalias() -= c * pw * w.transpose();
  hph.noalias() += (c * c * w.dot(pw)) * w * w.transpose();
  const Eigen::MatrixXd x = hph.bottomRightCorner(m - 1, m - 1);

  if (static_cast<std::size_t>(m) > kDenseEigenLimit) {
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (x + x.transpose()));
    if (llt.info() != Eigen::Success) {
      throw RankDeficiencyError("precision is singular on the sum-zero subspace (reducible graph?)");
    }
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double largest = ev[m - 2];
  if (!(largest > 0.0) || ev[0] <= kNullTolerance * largest) {
    throw RankDeficiencyError("precision is singular on the sum-zero subspace (reducible graph)");
  }
  return ev.array().log().sum();
}

double log_det_sum_zero(const SparseMatrix& p) { return log_det_sum_zero(Eigen::MatrixXd(p)); }

struct ConstrainedSolver::Factorization {
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
};

ConstrainedSolver::ConstrainedSolver(const GeneratorMatrix& q)
    : dim_(q.dimension()), qt_(q.sparse().transpose()), lu_(std::make_unique<Factorization>()) {
  if (!check_irreducible(q)) {
    throw SingularSystemError(
        "bordered system [[Q',1],[1',0]] is singular: the generator is reducible; "
        "check irreducibility of the graph");
  }
  const auto m = static_cast<Eigen::Index>(dim_);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(qt_.nonZeros()) + 2 * dim_);
  for (Eigen::Index k = 0; k < qt_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(qt_, k); it; ++it) {
      trip.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    trip.emplace_back(i, m, 1.0);
    trip.emplace_back(m, i, 1.0);
  }
  SparseMatrix bordered(m + 1, m + 1);
  bordered.setFromTriplets(trip.begin(), trip.end());
  bordered.makeCompressed();
  lu_->lu.analyzePattern(bordered);
  lu_->lu.factorize(bordered);
  if (lu_->lu.info() != Eigen::Success) {
    throw SingularSystemError("bordered system factorization failed: " + lu_->lu.lastErrorMessage() +
                              "; check irreducibility of the graph");
  }
}

ConstrainedSolver::~ConstrainedSolver() = default;
ConstrainedSolver::ConstrainedSolver(ConstrainedSolver&&) noexcept = default;
ConstrainedSolver& ConstrainedSolver::operator=(ConstrainedSolver&&) noexcept = default;

Eigen::VectorXd ConstrainedSolver::solve(const Eigen::VectorXd& r) const {
  const auto m = static_cast<Eigen::Index>(dim_);
  if (r.size() != m) throw PreconditionError("right-hand side has the wrong length");
  Eigen::VectorXd rhs(m + 1);
  rhs.head(m) = r.array() - r.mean();
  rhs[m] = 0.0;
  Eigen::VectorXd x = lu_->lu.solve(rhs);
  // one step of iterative refinement
  Eigen::VectorXd resid(m + 1);
  resid.head(m) = rhs.head(m) - qt_ * x.head(m) - Eigen::VectorXd::Constant(m, x[m]);
  resid[m] = -x.head(m).sum();
  x += lu_->lu.solve(resid);
  if (!x.allFinite()) throw SingularSystemError("bordered solve produced non-finite values");
  return x.head(m);
}

Eigen::VectorXd constrained_solve(const GeneratorMatrix& q, const Eigen::VectorXd& r) {
  return ConstrainedSolver(q).solve(r);
}

IntrinsicField::IntrinsicField(GeneratorMatrix q, double sigma)
    : q_(std::move(q)), sigma_(sigma), p_(stationary_precision(q_)), log_det_(0.0) {
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw ConfigError("field sigma must be positive");
  log_det_ = log_det_sum_zero(p_);
  if (!std::isfinite(log_det_)) throw NumericalError("log determinant is not finite");
  solver_ = std::make_shared<const ConstrainedSolver>(q_);
}

Eigen::VectorXd sample_field(const IntrinsicField& field, Rng& rng) {
  const auto m = static_cast<Eigen::Index>(field.dimension());
  Eigen::VectorXd gamma(m);
  for (Eigen::Index i = 0; i < m; ++i) gamma[i] = field.sigma() * rng.normal();
  gamma.array() -= gamma.mean();
  return field.solver().solve(gamma);
}

FieldSample sample_field(const IntrinsicField& field, std::uint64_t seed) {
  Rng rng(seed);
  return {sample_field(field, rng), seed};
}

double log_density(const Eigen::VectorXd& pi, const IntrinsicField& field) {
  const auto m = static_cast<Eigen::Index>(field.dimension());
  if (pi.size() != m) throw PreconditionError("field vector has the wrong length");
  const double scale = std::max(1.0, pi.cwiseAbs().maxCoeff());
  if (std::abs(pi.sum()) > 1e-8 * scale) {
    std::ostringstream os;
    os << "field violates the sum-zero constraint (sum = " << pi.sum() << ")";
    throw PreconditionError(os.str());
  }
  // pi'QQ'pi = |Q'pi|^2, which is nonnegative by construction
  const Eigen::VectorXd qt_pi = field.generator().sparse().transpose() * pi;
  const double quad = qt_pi.squaredNorm();
  if (!std::isfinite(quad)) throw NumericalError("non-finite quadratic form");
  const double s2 = field.sigma() * field.sigma();
  return -0.5 * static_cast<double>(m - 1) * std::log(2.0 * std::numbers::pi * s2) +
         0.5 * field.log_det() - quad / (2.0 * s2);
}

struct ConstrainedGaussianSampler::Impl {
  SparseMatrix a;                         // base with an explicit diagonal
  Eigen::VectorXd base_diag;
  std::vector<Eigen::Index> diag_slot;    // index into a.valuePtr() of each A_ii
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt;

  void load(const SparseMatrix& base) {
    const Eigen::Index m = base.rows();
    SparseMatrix eye(m, m);
    eye.setIdentity();
    SparseMatrix next = base + 0.0 * eye;
    next.makeCompressed();
    if (a.nonZeros() > 0 && next.nonZeros() != a.nonZeros()) {
      throw PreconditionError("new base matrix changes the sparsity pattern");
    }
    a = std::move(next);
    diag_slot.assign(static_cast<std::size_t>(m), -1);
    base_diag.resize(m);
    for (Eigen::Index j = 0; j < a.outerSize(); ++j) {
      for (Eigen::Index p = a.outerIndexPtr()[j]; p < a.outerIndexPtr()[j + 1]; ++p) {
        if (a.innerIndexPtr()[p] == j) {
          diag_slot[static_cast<std::size_t>(j)] = p;
          base_diag[j] = a.valuePtr()[p];
        }
      }
    }
  }

  void factorize(const Eigen::VectorXd& diag) {
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
      a.valuePtr()[diag_slot[static_cast<std::size_t>(i)]] = base_diag[i] + diag[i];
    }
    llt.factorize(a);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("full-conditional precision is not positive definite");
    }
  }

  Eigen::VectorXd krige(Eigen::VectorXd x) const {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(x.size());
    const Eigen::VectorXd v = llt.solve(ones);
    return x - v * (x.sum() / v.sum());
  }
};

ConstrainedGaussianSampler::ConstrainedGaussianSampler(const SparseMatrix& base)
    : impl_(std::make_unique<Impl>()) {
  impl_->load(base);
  impl_->llt.analyzePattern(impl_->a);
}

ConstrainedGaussianSampler::~ConstrainedGaussianSampler() = default;
ConstrainedGaussianSampler::ConstrainedGaussianSampler(ConstrainedGaussianSampler&&) noexcept =
    default;
ConstrainedGaussianSampler& ConstrainedGaussianSampler::operator=(
    ConstrainedGaussianSampler&&) noexcept = default;

void ConstrainedGaussianSampler::set_base(const SparseMatrix& base) { impl_->load(base); }

Eigen::VectorXd ConstrainedGaussianSampler::draw(const Eigen::VectorXd& diag,
                                                 const Eigen::VectorXd& linear, Rng& rng) {
  impl_->factorize(diag);
  const Eigen::Index m = linear.size();
  Eigen::VectorXd z(m);
  for (Eigen::Index i = 0; i < m; ++i) z[i] = rng.normal();
  // A = P' L L' P  =>  P^{-1} L'^{-1} z ~ N(0, A^{-1})
  Eigen::VectorXd noise = impl_->llt.permutationPinv() * Eigen::VectorXd(impl_->llt.matrixU().solve(z));
  Eigen::VectorXd x = impl_->llt.solve(linear) + noise;
  return impl_->krige(std::move(x));
}

Eigen::VectorXd ConstrainedGaussianSampler::constrained_mean(const Eigen::VectorXd& diag,
                                                             const Eigen::VectorXd& linear) {
  impl_->factorize(diag);
  return impl_->krige(impl_->llt.solve(linear));
}

}  // namespace rwspatial
