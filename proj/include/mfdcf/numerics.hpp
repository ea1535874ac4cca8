#pragma once

// Dense and sparse matrix kernels shared by the fusion, solver, coldstart and
// data modules. Everything here is a pure function of its arguments.

#include "mfdcf/rng.hpp"
#include "mfdcf/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>
#include <string>

namespace mfdcf {

/// Rank-o factorization left · diag(singulars) · right of an n×m matrix.
template <typename Scalar>
struct TruncatedSVD {
  Matrix<Scalar> left;       // n×o, orthonormal columns
  Vector<Scalar> singulars;  // o, descending, ≥ 0
  Matrix<Scalar> right;      // o×m, orthonormal rows
  Index source_rows = 0;
  Index source_cols = 0;

  Index rank() const { return singulars.size(); }

  /// ‖left·diag(s)·right‖²_F, i.e. Σ s_i².
  Scalar frobenius_squared() const { return singulars.squaredNorm(); }

  /// Materializes the approximation. Only for tests and tiny inputs.
  Matrix<Scalar> reconstruct() const { return left * singulars.asDiagonal() * right; }
};

template <typename Scalar>
struct EigenPair {
  Vector<Scalar> values;   // ascending
  Matrix<Scalar> vectors;  // orthonormal columns
};

struct SvdOptions {
  Index max_steps = -1;  // Krylov dimension cap; < 0: min(n, m)
  double tol = 1e-10;    // on max_i ‖Aᵀu_i − σ_i v_i‖ / σ_1
  std::uint64_t seed = 0x5eedULL;
};

namespace detail {

template <typename Scalar>
bool symmetric_within(const Matrix<Scalar>& A, double tol) {
  return (A - A.transpose()).norm() <= tol * std::max<double>(1.0, A.norm());
}

template <typename SparseT>
struct SparseOperator {
  using Scalar = typename SparseT::Scalar;
  const SparseT& A;
  Index rows() const { return A.rows(); }
  Index cols() const { return A.cols(); }
  Matrix<Scalar> apply(const Matrix<Scalar>& X) const { return A * X; }
  Matrix<Scalar> apply_adjoint(const Matrix<Scalar>& Y) const { return A.transpose() * Y; }
};

// (X − mean·1ᵀ) without forming the centered matrix.
template <typename XType, typename ScalarT>
struct CenteredOperator {
  using Scalar = ScalarT;
  const XType& X;
  const Vector<Scalar>& mean;
  Index rows() const { return X.rows(); }
  Index cols() const { return X.cols(); }
  Matrix<Scalar> apply(const Matrix<Scalar>& V) const {
    Matrix<Scalar> out = X * V;
    out.noalias() -= mean * V.colwise().sum();
    return out;
  }
  Matrix<Scalar> apply_adjoint(const Matrix<Scalar>& U) const {
    Matrix<Scalar> out = X.transpose() * U;
    out.rowwise() -= (mean.transpose() * U);
    return out;
  }
};

}  // namespace detail

namespace detail {

template <typename Op>
struct AdjointOperator {
  using Scalar = typename Op::Scalar;
  const Op& op;
  Index rows() const { return op.cols(); }
  Index cols() const { return op.rows(); }
  Matrix<Scalar> apply(const Matrix<Scalar>& X) const { return op.apply_adjoint(X); }
  Matrix<Scalar> apply_adjoint(const Matrix<Scalar>& Y) const { return op.apply(Y); }
};

// Removes the span of the first `p` columns of Q from x, twice.
template <typename Scalar>
void reorthogonalize(const Matrix<Scalar>& Q, Index p, Vector<Scalar>& x) {
  if (p == 0) return;
  for (int pass = 0; pass < 2; ++pass) x.noalias() -= Q.leftCols(p) * (Q.leftCols(p).transpose() * x);
}

template <typename Scalar>
void grow_columns(Matrix<Scalar>& Q, Index needed, Index limit) {
  if (needed <= Q.cols()) return;
  Q.conservativeResize(Eigen::NoChange, std::min(limit, std::max(needed, 2 * Q.cols())));
}

// Lanczos bidiagonalization for n ≥ m. The right basis V lives in R^m, so
// once p = m the factorization A·V = U·B is exact.
template <typename Op, typename Scalar>
TruncatedSVD<Scalar> golub_kahan_svd(const Op& op, Index o, const SvdOptions& opts) {
  const Index n = op.rows();
  const Index m = op.cols();
  const Index cap = opts.max_steps < 0 ? m : std::clamp<Index>(opts.max_steps, o, m);
  RngStream rng(opts.seed, "truncated_svd");

  const Index start = std::min(m, std::max<Index>(2 * o + 16, 64));
  Matrix<Scalar> U(n, start), V(m, start);
  std::vector<Scalar> alpha, beta;  // diagonal and superdiagonal of B
  Scalar scale = 0;                 // running estimate of ‖A‖ for breakdown tests
  const Scalar breakdown = std::numeric_limits<Scalar>::epsilon() * Scalar(64);

  auto fresh = [&](const Matrix<Scalar>& Q, Index p, Index dim) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      Vector<Scalar> x = rng.gaussian_matrix<Scalar>(dim, 1).col(0);
      reorthogonalize(Q, p, x);
      const Scalar len = x.norm();
      if (len > Scalar(1e-6)) return Vector<Scalar>(x / len);
    }
    throw NumericError("truncated_svd: could not extend the Krylov basis", static_cast<int>(p));
  };
  auto multiply = [&](bool adjoint, const Vector<Scalar>& x) {
    Matrix<Scalar> y = adjoint ? op.apply_adjoint(Matrix<Scalar>(x)) : op.apply(Matrix<Scalar>(x));
    return Vector<Scalar>(y.col(0));
  };
  // Appends v_p (given) and the matching u_p.
  auto extend = [&](const Vector<Scalar>& v, Index p, Scalar coupling) {
    grow_columns(V, p + 1, m);
    grow_columns(U, p + 1, n);
    V.col(p) = v;
    Vector<Scalar> z = multiply(false, v);
    if (p > 0) z.noalias() -= coupling * U.col(p - 1);
    reorthogonalize(U, p, z);
    Scalar a = z.norm();
    scale = std::max(scale, a);
    if (a <= breakdown * scale) {
      a = 0;
      U.col(p) = fresh(U, p, n);
    } else {
      U.col(p) = z / a;
    }
    alpha.push_back(a);
  };

  extend(fresh(V, 0, m), 0, 0);
  Index p = 1;
  Index next_check = o;
  bool complete = false;  // A vanishes on the orthogonal complement of V
  for (;;) {
    // w = Aᵀu_p − α_p v_p, orthogonal to V: its norm is the residual coupling.
    Vector<Scalar> w = multiply(true, U.col(p - 1));
    w.noalias() -= alpha[p - 1] * V.col(p - 1);
    reorthogonalize(V, p, w);
    Scalar b = w.norm();
    scale = std::max(scale, b);
    const bool broke = b <= breakdown * scale || p == m;
    if (broke) b = 0;

    if (p >= next_check || p == cap) {
      if (scale == Scalar(0)) throw ParameterError("truncated_svd: matrix has no nonzero entry");
      Matrix<Scalar> B = Matrix<Scalar>::Zero(p, p);
      for (Index i = 0; i < p; ++i) {
        B(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < p) B(i, i + 1) = beta[static_cast<std::size_t>(i)];
      }
      Eigen::BDCSVD<Matrix<Scalar>> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Vector<Scalar>& s = svd.singularValues();
      const Scalar top = s(0);
      const Scalar zero_cut = top * Scalar(1e-13) * static_cast<Scalar>(n);
      Scalar worst = 0;
      for (Index i = 0; i < o; ++i) {
        if (s(i) <= zero_cut) continue;
        worst = std::max(worst, b * std::abs(svd.matrixU()(p - 1, i)));
      }
      // A breakdown only proves an invariant subspace; repeated singular
      // values can still hide outside it until the basis is complete.
      const bool settled = !broke || complete || p == m;
      if (settled && worst <= static_cast<Scalar>(opts.tol) * top) {
        TruncatedSVD<Scalar> out;
        out.left = U.leftCols(p) * svd.matrixU().leftCols(o);
        out.singulars = s.head(o);
        out.right = (V.leftCols(p) * svd.matrixV().leftCols(o)).transpose();
        for (Index i = 0; i < o; ++i) {
          if (s(i) <= zero_cut) out.singulars(i) = Scalar(0);
        }
        return out;
      }
      if (p == cap) throw NumericError("truncated_svd: Lanczos bidiagonalization did not converge", static_cast<int>(p));
      next_check = p + std::max<Index>(16, p / 8);
    }
    beta.push_back(b);
    extend(broke ? fresh(V, p, m) : Vector<Scalar>(w / b), p, b);
    ++p;
    // A random direction outside span(V) that A maps to zero means, with
    // probability one, that span(V) already contains the row space.
    if (broke && alpha.back() == Scalar(0)) {
      complete = true;
      next_check = std::max(o, std::min(next_check, p));
    }
  }
}

}  // namespace detail

/// Rank-o truncated SVD of a linear operator exposing rows(), cols(),
/// apply(X) = A·X and apply_adjoint(Y) = Aᵀ·Y.
///
/// Golub-Kahan-Lanczos bidiagonalization with full reorthogonalization,
/// started from a seeded random vector. Memory is O((n + m)·p) for Krylov
/// dimension p; the residual of every Ritz triplet is read off the small
/// bidiagonal problem, so convergence checks cost no extra products.
template <typename Op, typename Scalar = typename Op::Scalar>
TruncatedSVD<Scalar> truncated_svd_op(const Op& op, Index o, const SvdOptions& opts = {}) {
  const Index n = op.rows();
  const Index m = op.cols();
  const Index limit = std::min(n, m);
  if (o < 1 || o > limit)
    throw ParameterError("truncated_svd: rank " + std::to_string(o) + " outside [1, " +
                         std::to_string(limit) + "]");
  TruncatedSVD<Scalar> out;
  if (n >= m) {
    out = detail::golub_kahan_svd<Op, Scalar>(op, o, opts);
  } else {
    auto t = detail::golub_kahan_svd<detail::AdjointOperator<Op>, Scalar>(detail::AdjointOperator<Op>{op}, o, opts);
    out.left = t.right.transpose();
    out.singulars = std::move(t.singulars);
    out.right = t.left.transpose();
  }
  out.source_rows = n;
  out.source_cols = m;
  return out;
}

/// Rank-o truncated SVD of a sparse matrix; absent entries are exact zeros.
template <typename Scalar, int Options>
TruncatedSVD<Scalar> truncated_svd(const Eigen::SparseMatrix<Scalar, Options>& M, Index o,
                                   const SvdOptions& opts = {}) {
  if (M.nonZeros() == 0) throw ParameterError("truncated_svd: matrix has no nonzero entry");
  detail::SparseOperator<Eigen::SparseMatrix<Scalar, Options>> op{M};
  return truncated_svd_op(op, o, opts);
}

/// Solves A·W + W·Bm = C for symmetric A (r×r) and Bm (d×d).
///
/// Both coefficients are diagonalized; the rotated right-hand side is divided
/// entrywise by λ_i(A) + ν_j(Bm). `ridge` is added to the diagonal of both
/// coefficients before the decomposition.
template <typename Scalar>
Matrix<Scalar> solve_sylvester(const Matrix<Scalar>& A, const Matrix<Scalar>& Bm,
                               const Matrix<Scalar>& C, Scalar ridge = Scalar(0)) {
  if (A.rows() != A.cols() || Bm.rows() != Bm.cols() || C.rows() != A.rows() ||
      C.cols() != Bm.rows())
    throw ParameterError("solve_sylvester: shape mismatch");
  if (!detail::symmetric_within(A, 1e-10) || !detail::symmetric_within(Bm, 1e-10))
    throw ParameterError("solve_sylvester: coefficients must be symmetric");

  const Index r = A.rows();
  const Index d = Bm.rows();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> ea(A + ridge * Matrix<Scalar>::Identity(r, r));
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eb(Bm + ridge * Matrix<Scalar>::Identity(d, d));
  if (ea.info() != Eigen::Success || eb.info() != Eigen::Success)
    throw NumericError("solve_sylvester: eigendecomposition failed");

  Matrix<Scalar> rotated = ea.eigenvectors().transpose() * C * eb.eigenvectors();
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < r; ++i) {
      const Scalar denom = ea.eigenvalues()(i) + eb.eigenvalues()(j);
      if (std::abs(denom) < Scalar(1e-12))
        throw SingularityError("solve_sylvester: eigenvalue pair sum below 1e-12");
      rotated(i, j) /= denom;
    }
  }
  return ea.eigenvectors() * rotated * eb.eigenvectors().transpose();
}

/// argmax over orthogonal R of tr(Rᵀ·C), given by R = P·Qᵀ for C = P·Σ·Qᵀ.
template <typename Scalar>
Matrix<Scalar> orthogonal_procrustes(const Matrix<Scalar>& C) {
  if (C.rows() != C.cols()) throw ParameterError("orthogonal_procrustes: C must be square");
  if (!C.allFinite()) throw ParameterError("orthogonal_procrustes: non-finite input");
  Eigen::JacobiSVD<Matrix<Scalar>> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

template <typename Scalar>
EigenPair<Scalar> symmetric_eigen(const Matrix<Scalar>& G) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(G);
  if (es.info() != Eigen::Success) throw NumericError("symmetric_eigen: decomposition failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// Orthonormal eigenvectors of symmetric G for its `count` smallest eigenvalues.
template <typename Scalar>
Matrix<Scalar> trailing_eigvecs(const Matrix<Scalar>& G, Index count) {
  if (G.rows() != G.cols()) throw ParameterError("trailing_eigvecs: G must be square");
  if (count < 0 || count > G.rows())
    throw ParameterError("trailing_eigvecs: count " + std::to_string(count) + " outside [0, " +
                         std::to_string(G.rows()) + "]");
  if (count == 0) return Matrix<Scalar>(G.rows(), 0);
  return symmetric_eigen(G).vectors.leftCols(count);
}

/// Mean and principal directions learned by pca_reduce; applies the same
/// projection to unseen columns.
template <typename Scalar>
struct PcaBasis {
  Vector<Scalar> mean;        // d
  Matrix<Scalar> components;  // d×t, orthonormal columns, descending variance

  Index input_dim() const { return mean.size(); }
  Index output_dim() const { return components.cols(); }

  template <typename Derived>
  Matrix<Scalar> project(const Eigen::MatrixBase<Derived>& X) const {
    return components.transpose() * (X.colwise() - mean);
  }
};

template <typename Scalar>
struct PcaResult {
  Matrix<Scalar> scores;  // t×n
  PcaBasis<Scalar> basis;
  Index requested_dim = 0;
  bool clipped() const { return basis.output_dim() < requested_dim; }
};

namespace detail {

// Flip each column so its largest-magnitude entry is positive.
template <typename Scalar>
void canonical_signs(Matrix<Scalar>& V) {
  for (Index j = 0; j < V.cols(); ++j) {
    Index arg = 0;
    V.col(j).cwiseAbs().maxCoeff(&arg);
    if (V(arg, j) < Scalar(0)) V.col(j) = -V.col(j);
  }
}

template <typename Scalar>
Matrix<Scalar> top_eigvecs_of_covariance(const Matrix<Scalar>& cov, Index t) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(cov);
  if (es.info() != Eigen::Success) throw NumericError("pca_reduce: eigendecomposition failed");
  return es.eigenvectors().rightCols(t).rowwise().reverse();
}

inline constexpr Index kDenseCovarianceLimit = 4096;

template <typename Scalar>
Index clip_pca_dim(Index d, Index n, Index target) {
  if (target < 1) throw ParameterError("pca_reduce: target_dim must be positive");
  return std::min({target, d, n});
}

}  // namespace detail

/// Projects mean-centered columns of X (d×n) onto the top `target_dim`
/// principal directions. No whitening. A target above min(d, n) is clipped
/// and reported through PcaResult::clipped().
template <typename Scalar>
PcaResult<Scalar> pca_reduce(const Matrix<Scalar>& X, Index target_dim) {
  const Index t = detail::clip_pca_dim<Scalar>(X.rows(), X.cols(), target_dim);
  PcaResult<Scalar> out;
  out.requested_dim = target_dim;
  out.basis.mean = X.rowwise().mean();
  Matrix<Scalar> centered = X.colwise() - out.basis.mean;
  Matrix<Scalar> cov = centered * centered.transpose();
  out.basis.components = detail::top_eigvecs_of_covariance<Scalar>(cov, t);
  detail::canonical_signs(out.basis.components);
  out.scores = out.basis.components.transpose() * centered;
  return out;
}

/// Sparse overload: centering is implicit, so X is never densified.
template <typename Scalar, int Options>
PcaResult<Scalar> pca_reduce(const Eigen::SparseMatrix<Scalar, Options>& X, Index target_dim,
                             const SvdOptions& opts = {}) {
  const Index d = X.rows();
  const Index n = X.cols();
  const Index t = detail::clip_pca_dim<Scalar>(d, n, target_dim);
  PcaResult<Scalar> out;
  out.requested_dim = target_dim;
  out.basis.mean = (X * Vector<Scalar>::Ones(n)) / static_cast<Scalar>(n);
  const Vector<Scalar>& mu = out.basis.mean;
  if (d <= detail::kDenseCovarianceLimit) {
    Matrix<Scalar> cov = Matrix<Scalar>(X * X.transpose());
    cov.noalias() -= static_cast<Scalar>(n) * mu * mu.transpose();
    out.basis.components = detail::top_eigvecs_of_covariance<Scalar>(cov, t);
  } else {
    detail::CenteredOperator<Eigen::SparseMatrix<Scalar, Options>, Scalar> op{X, mu};
    out.basis.components = truncated_svd_op(op, t, opts).left;
  }
  detail::canonical_signs(out.basis.components);
  Matrix<Scalar> proj = (X.transpose() * out.basis.components).transpose();  // t×n
  proj.colwise() -= out.basis.components.transpose() * mu;
  out.scores = std::move(proj);
  return out;
}

}  // namespace mfdcf
