#include "doctest.h"

#include "mfdcf/numerics.hpp"
#include "test_util.hpp"

#include <cmath>
#include <numbers>

using namespace mfdcf;

namespace {

// vec(A·W + W·B) = (I ⊗ A + Bᵀ ⊗ I) vec(W), solved densely.
Mat kronecker_sylvester(const Mat& A, const Mat& B, const Mat& C) {
  const Index r = A.rows(), d = B.rows();
  Mat K = Mat::Zero(r * d, r * d);
  for (Index j = 0; j < d; ++j) {
    K.block(j * r, j * r, r, r) += A;
    for (Index l = 0; l < d; ++l) K.block(j * r, l * r, r, r).diagonal().array() += B(l, j);
  }
  Vec c = Eigen::Map<const Vec>(C.data(), r * d);
  Vec w = K.fullPivLu().solve(c);
  return Eigen::Map<Mat>(w.data(), r, d);
}

}  // namespace

TEST_CASE("truncated_svd rank-1 and single-entry cases") {
  Vec u = Vec::LinSpaced(6, 1.0, 6.0).normalized();
  Vec v = Vec::LinSpaced(4, -2.0, 1.0).normalized();
  SpMat M = Mat(5.0 * u * v.transpose()).sparseView();
  auto svd = truncated_svd(M, 1);
  CHECK(svd.singulars(0) == doctest::Approx(5.0).epsilon(1e-12));

  SpMat E(4, 3);
  E.insert(0, 0) = 3.0;
  auto e = truncated_svd(E, 1);
  CHECK(e.singulars(0) == doctest::Approx(3.0));
  CHECK(std::abs(e.left(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(e.right(0, 0)) == doctest::Approx(1.0));
}

TEST_CASE("truncated_svd at full rank reproduces a random sparse matrix") {
  RngStream rng(11, "svd-test");
  SpMat M = testutil::random_sparse(20, 15, 0.35, rng);
  auto svd = truncated_svd(M, 15);
  Mat dense = Mat(M);
  Eigen::JacobiSVD<Mat> oracle(dense);
  CHECK((svd.singulars - oracle.singularValues()).norm() < 1e-8);
  CHECK((svd.reconstruct() - dense).norm() / dense.norm() < 1e-8);
  CHECK(testutil::gram_defect(svd.left) < 1e-8);
  CHECK(testutil::gram_defect(Mat(svd.right.transpose())) < 1e-8);
  for (Index i = 1; i < svd.rank(); ++i) CHECK(svd.singulars(i) <= svd.singulars(i - 1));
}

TEST_CASE("truncated_svd low rank is the best rank-o approximation") {
  RngStream rng(5, "svd-test-lowrank");
  SpMat M = testutil::random_sparse(60, 40, 0.2, rng);
  auto svd = truncated_svd(M, 6);
  Eigen::JacobiSVD<Mat> oracle(Mat(M), Eigen::ComputeThinU | Eigen::ComputeThinV);
  Mat best = oracle.matrixU().leftCols(6) * oracle.singularValues().head(6).asDiagonal() *
             oracle.matrixV().leftCols(6).transpose();
  CHECK((svd.singulars - oracle.singularValues().head(6)).norm() < 1e-8);
  CHECK((svd.reconstruct() - best).norm() < 1e-7);
}

TEST_CASE("truncated_svd handles rank-deficient input and rejects bad ranks") {
  SpMat M(6, 5);
  M.insert(1, 2) = 2.0;
  M.insert(3, 4) = -1.0;
  auto svd = truncated_svd(M, 5);
  CHECK(svd.singulars(0) == doctest::Approx(2.0));
  CHECK(svd.singulars(1) == doctest::Approx(1.0));
  CHECK(svd.singulars(2) == 0.0);
  CHECK((svd.reconstruct() - Mat(M)).norm() < 1e-10);

  CHECK_THROWS_AS(truncated_svd(M, 0), ParameterError);
  CHECK_THROWS_AS(truncated_svd(M, 6), ParameterError);
  SpMat empty(3, 3);
  CHECK_THROWS_AS(truncated_svd(empty, 1), ParameterError);
}

TEST_CASE("truncated_svd finds repeated singular values and wide inputs") {
  // Diagonal with a triple top value: a single Krylov chain sees only one copy.
  SpMat D(40, 30);
  for (Index i = 0; i < 30; ++i) D.insert(i, i) = i < 3 ? 9.0 : 1.0 / (1.0 + static_cast<double>(i));
  auto svd = truncated_svd(D, 4);
  CHECK(svd.singulars(0) == doctest::Approx(9.0).epsilon(1e-10));
  CHECK(svd.singulars(2) == doctest::Approx(9.0).epsilon(1e-10));
  CHECK(svd.singulars(3) == doctest::Approx(0.25).epsilon(1e-10));

  RngStream rng(21, "svd-wide");
  SpMat W = testutil::random_sparse(25, 70, 0.3, rng);
  auto wide = truncated_svd(W, 25);
  CHECK(wide.left.rows() == 25);
  CHECK(wide.right.cols() == 70);
  CHECK((wide.reconstruct() - Mat(W)).norm() / Mat(W).norm() < 1e-8);
  CHECK(testutil::gram_defect(Mat(wide.right.transpose())) < 1e-8);
}

TEST_CASE("truncated_svd pads a low-rank matrix with orthonormal null directions") {
  RngStream rng(8, "svd-lowrank-pad");
  const Mat L = rng.gaussian_matrix<double>(150, 4) * rng.gaussian_matrix<double>(4, 90);
  auto svd = truncated_svd(SpMat(L.sparseView()), 40);
  CHECK(svd.rank() == 40);
  CHECK(svd.singulars.tail(36).norm() == 0.0);
  CHECK(testutil::gram_defect(svd.left) < 1e-8);
  CHECK(testutil::gram_defect(Mat(svd.right.transpose())) < 1e-8);
  CHECK((svd.reconstruct() - L).norm() / L.norm() < 1e-10);
}

TEST_CASE("truncated_svd reports non-convergence with the iteration count") {
  RngStream rng(3, "svd-slow");
  SpMat M = testutil::random_sparse(80, 70, 0.3, rng);
  SvdOptions opts;
  opts.max_steps = 6;
  opts.tol = 1e-15;
  try {
    truncated_svd(M, 5, opts);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.iterations() == 6);
  }
}

TEST_CASE("solve_sylvester scalar and identity cases") {
  Mat A{{2.0}}, B{{3.0}}, C{{10.0}};
  CHECK(solve_sylvester(A, B, C)(0, 0) == doctest::Approx(2.0).epsilon(1e-14));

  RngStream rng(1, "syl");
  Mat Cr = rng.gaussian_matrix(3, 4);
  Mat W = solve_sylvester(Mat(Mat::Zero(3, 3)), Mat(Mat::Identity(4, 4)), Cr);
  CHECK((W - Cr).norm() < 1e-12);
}

TEST_CASE("solve_sylvester matches the Kronecker brute-force solve") {
  RngStream rng(2, "syl-kron");
  Mat A = testutil::random_spd(4, rng);
  Mat B = testutil::random_spd(6, rng);
  Mat C = rng.gaussian_matrix(4, 6);
  Mat W = solve_sylvester(A, B, C);
  CHECK((W - kronecker_sylvester(A, B, C)).norm() < 1e-8);
}

TEST_CASE("solve_sylvester residual bound on random SPD instances") {
  RngStream rng(4, "syl-residual");
  for (int t = 0; t < 100; ++t) {
    const Index r = 1 + static_cast<Index>(rng.uniform() * 64);
    const Index d = 1 + static_cast<Index>(rng.uniform() * 64);
    Mat A = testutil::random_spd(r, rng);
    Mat B = testutil::random_spd(d, rng);
    Mat C = rng.gaussian_matrix(r, d);
    Mat W = solve_sylvester(A, B, C);
    CHECK((A * W + W * B - C).norm() / std::max(C.norm(), 1.0) < 1e-8);
  }
}

TEST_CASE("solve_sylvester singular and malformed inputs") {
  Mat Z = Mat::Zero(2, 2);
  CHECK_THROWS_AS(solve_sylvester(Z, Z, Mat(Mat::Ones(2, 2))), SingularityError);
  // The ridge lifts a zero pair sum.
  Mat W = solve_sylvester(Z, Z, Mat(Mat::Ones(2, 2)), 0.5);
  CHECK((W - Mat::Ones(2, 2)).norm() < 1e-12);
  Mat asym{{1.0, 2.0}, {0.0, 1.0}};
  CHECK_THROWS_AS(solve_sylvester(asym, Z, Z), ParameterError);
  CHECK_THROWS_AS(solve_sylvester(Z, Z, Mat(Mat::Ones(3, 2))), ParameterError);
}

TEST_CASE("orthogonal_procrustes identity and diagonal cases") {
  CHECK((orthogonal_procrustes(Mat(Mat::Identity(3, 3))) - Mat::Identity(3, 3)).norm() < 1e-12);

  Mat C{{2.0, 0.0}, {0.0, -3.0}};
  Mat R = orthogonal_procrustes(C);
  CHECK((R - Mat(Eigen::Vector2d(1.0, -1.0).asDiagonal())).norm() < 1e-12);
  CHECK((R.transpose() * C).trace() == doctest::Approx(5.0));

  // Brute force over all 2×2 rotations and reflections on a 0.001 rad grid.
  double best = -1e300;
  for (double th = 0.0; th < 2.0 * std::numbers::pi; th += 1e-3) {
    const double c = std::cos(th), s = std::sin(th);
    Mat rot{{c, -s}, {s, c}};
    Mat ref{{c, s}, {s, -c}};
    best = std::max({best, (rot.transpose() * C).trace(), (ref.transpose() * C).trace()});
  }
  CHECK(best == doctest::Approx(5.0).epsilon(1e-6));
  CHECK((R.transpose() * C).trace() >= best - 1e-12);
}

TEST_CASE("orthogonal_procrustes beats random orthogonal samples") {
  RngStream rng(8, "procrustes");
  Mat C = rng.gaussian_matrix(8, 8);
  Mat R = orthogonal_procrustes(C);
  CHECK(testutil::gram_defect(R) < 1e-10);
  const double value = (R.transpose() * C).trace();
  for (int t = 0; t < 1000; ++t) {
    Mat Q = testutil::random_orthogonal(8, rng);
    CHECK(value >= (Q.transpose() * C).trace());
  }
  CHECK_THROWS_AS(orthogonal_procrustes(Mat(Mat::Constant(2, 2, NAN))), ParameterError);
}

TEST_CASE("trailing_eigvecs picks the smallest eigenvalues") {
  Mat G = Eigen::Vector3d(5.0, 1.0, 3.0).asDiagonal();
  Mat V = trailing_eigvecs(G, 1);
  REQUIRE(V.cols() == 1);
  CHECK(std::abs(V(1, 0)) == doctest::Approx(1.0));
  CHECK(trailing_eigvecs(G, 0).cols() == 0);
  CHECK_THROWS_AS(trailing_eigvecs(G, 4), ParameterError);
  CHECK_THROWS_AS(trailing_eigvecs(G, -1), ParameterError);

  RngStream rng(9, "trailing");
  Mat W = rng.gaussian_matrix(5, 7);
  Mat WW = W * W.transpose();
  Mat V2 = trailing_eigvecs(WW, 2);
  Eigen::JacobiSVD<Mat> oracle(W);
  const Vec sv = oracle.singularValues();
  const double expected = sv(3) * sv(3) + sv(4) * sv(4);
  CHECK((V2.transpose() * WW * V2).trace() == doctest::Approx(expected).epsilon(1e-10));
  CHECK(testutil::gram_defect(V2) < 1e-8);
}

TEST_CASE("pca_reduce constant columns and exact low rank") {
  Mat X = Eigen::Vector3d(1.0, 2.0, 3.0).replicate(1, 6);
  auto constant = pca_reduce(X, 2);
  CHECK(constant.scores.norm() < 1e-12);

  RngStream rng(10, "pca");
  Mat X2 = rng.gaussian_matrix(5, 2) * rng.gaussian_matrix(2, 30);
  auto res = pca_reduce(X2, 2);
  Mat rebuilt = (res.basis.components * res.scores).colwise() + res.basis.mean;
  CHECK((rebuilt - X2).norm() < 1e-8);
  CHECK(!res.clipped());
  CHECK_THROWS_AS(pca_reduce(X2, 0), ParameterError);
}

TEST_CASE("pca_reduce clips the target dimension to the data rank bound") {
  RngStream rng(12, "pca-clip");
  Mat X = rng.gaussian_matrix(300, 100);
  auto res = pca_reduce(X, 128);
  CHECK(res.clipped());
  CHECK(res.scores.rows() == 100);
  // Full-SVD check: the centered matrix has rank at most 99, so the clipped
  // basis spans everything and reconstructs exactly.
  Mat centered = X.colwise() - X.rowwise().mean();
  Eigen::JacobiSVD<Mat> svd(centered);
  CHECK(svd.rank() <= 100);
  Mat rebuilt = res.basis.components * res.scores;
  CHECK((rebuilt - centered).norm() / centered.norm() < 1e-8);
}

TEST_CASE("pca_reduce output rows are uncorrelated and sparse path agrees") {
  RngStream rng(13, "pca-sparse");
  SpMat X = testutil::random_sparse(40, 90, 0.15, rng);
  auto sparse = pca_reduce(X, 6);
  auto dense = pca_reduce(Mat(X), 6);
  CHECK((sparse.scores - dense.scores).norm() < 1e-8);

  Mat cov = sparse.scores * sparse.scores.transpose();
  const double max_var = cov.diagonal().maxCoeff();
  Mat off = cov;
  off.diagonal().setZero();
  CHECK(off.cwiseAbs().maxCoeff() < 1e-6 * max_var);

  // New columns go through the stored basis.
  Mat cols = Mat(X).leftCols(3);
  CHECK((sparse.basis.project(cols) - sparse.scores.leftCols(3)).norm() < 1e-10);
}

TEST_CASE("pca_reduce iterative path for wide vocabularies") {
  RngStream rng(14, "pca-wide");
  // Exceeds the dense-covariance limit, so the centered operator path runs.
  SpMat X = testutil::random_sparse(detail::kDenseCovarianceLimit + 10, 60, 0.02, rng);
  auto res = pca_reduce(X, 5);
  Mat centered = Mat(X).colwise() - res.basis.mean;
  Eigen::JacobiSVD<Mat> oracle(centered);
  Vec variances = res.scores.rowwise().squaredNorm();
  for (Index i = 0; i < 5; ++i)
    CHECK(std::sqrt(variances(i)) == doctest::Approx(oracle.singularValues()(i)).epsilon(1e-8));
}
