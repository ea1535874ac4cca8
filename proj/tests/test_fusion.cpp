#include "mfdcf/fusion.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/SVD>

#include <cmath>

using namespace mfdcf;
using testutil::random_orthogonal;

namespace {

std::vector<FeatureBlock> random_views(const std::vector<Index>& dims, Index n, RngStream& rng) {
  std::vector<FeatureBlock> views;
  for (std::size_t m = 0; m < dims.size(); ++m) {
    FeatureBlock b;
    b.view_index = static_cast<int>(m);
    b.data = rng.gaussian_matrix(dims[m], n);
    views.push_back(std::move(b));
  }
  return views;
}

// (1/μ)‖H − W·X‖² + γ·tr(VᵀWWᵀV) + ridge·‖W‖², written out entry by entry.
double projection_objective(const Mat& H, const Mat& W, const Mat& X, double mu, const Mat& V, double gamma,
                            double ridge) {
  double fit = 0.0;
  for (Index i = 0; i < H.rows(); ++i)
    for (Index j = 0; j < H.cols(); ++j) {
      double wx = 0.0;
      for (Index k = 0; k < W.cols(); ++k) wx += W(i, k) * X(k, j);
      fit += (H(i, j) - wx) * (H(i, j) - wx);
    }
  double pen = 0.0;
  for (Index c = 0; c < V.cols(); ++c)
    for (Index k = 0; k < W.cols(); ++k) {
      double s = 0.0;
      for (Index i = 0; i < W.rows(); ++i) s += V(i, c) * W(i, k);
      pen += s * s;
    }
  return fit / mu + gamma * pen + ridge * W.squaredNorm();
}

Vec random_simplex_point(Index M, RngStream& rng) {
  Vec p(M);
  for (Index m = 0; m < M; ++m) p(m) = -std::log(std::max(rng.uniform(), 1e-300));
  return p / p.sum();
}

}  // namespace

TEST_CASE("self-weighted view weights beat random simplex points") {
  RngStream rng(1, "fusion-weights");
  for (int trial = 0; trial < 5; ++trial) {
    const Index M = 2 + trial;
    const Index r = 6, n = 30;
    Mat H = rng.gaussian_matrix(r, n);
    auto views = random_views(std::vector<Index>(static_cast<std::size_t>(M), 5), n, rng);
    std::vector<Mat> W;
    for (Index m = 0; m < M; ++m) W.push_back(rng.gaussian_matrix(r, 5) * (0.2 + 0.3 * static_cast<double>(m)));

    const Vec mu = update_weights(H, W, views);
    CHECK(mu.minCoeff() >= 0.0);
    CHECK(mu.sum() == doctest::Approx(1.0).epsilon(1e-12));

    const Vec h = residual_norms(H, W, views);
    const double best = weight_objective(h, mu);
    CHECK(best == doctest::Approx(h.sum() * h.sum()).epsilon(1e-12));
    for (int s = 0; s < 10000; ++s) CHECK(weight_objective(h, random_simplex_point(M, rng)) >= best * (1 - 1e-12));
  }
}

TEST_CASE("weights from residuals") {
  CHECK(weights_from_residuals(Vec::Zero(3)).isApprox(Vec::Constant(3, 1.0 / 3.0)));
  const Vec w = weights_from_residuals((Vec(3) << 1.0, 3.0, 0.0).finished());
  CHECK(w(0) == doctest::Approx(0.25));
  CHECK(w(1) == doctest::Approx(0.75));
  CHECK(w(2) == 0.0);
  CHECK(inverse_weight(0.0) == doctest::Approx(1.0 / kWeightFloor));
}

TEST_CASE("projection update zeroes the finite-difference gradient") {
  RngStream rng(2, "fusion-fd");
  const Index r = 4, d = 5, n = 12;
  for (double gamma : {0.0, 0.7, 5.0}) {
    const Mat H = rng.gaussian_matrix(r, n);
    const Mat X = rng.gaussian_matrix(d, n);
    const Mat Q = random_orthogonal(r, rng);
    const Mat V = Q.leftCols(2);
    const double mu = 0.3;

    const Mat W = update_projection(H, X, mu, V, gamma, 0.0);
    const double step = 1e-5;
    Mat grad(r, d);
    for (Index i = 0; i < r; ++i)
      for (Index k = 0; k < d; ++k) {
        Mat plus = W, minus = W;
        plus(i, k) += step;
        minus(i, k) -= step;
        grad(i, k) = (projection_objective(H, plus, X, mu, V, gamma, 0.0) -
                      projection_objective(H, minus, X, mu, V, gamma, 0.0)) /
                     (2 * step);
      }
    CHECK(grad.norm() < 1e-6);
  }
}

TEST_CASE("projection update with ridge minimizes the ridged objective") {
  RngStream rng(3, "fusion-ridge");
  // Rank-deficient features (d > n) need the ridge to be solvable.
  const Mat H = rng.gaussian_matrix(3, 4);
  const Mat X = rng.gaussian_matrix(6, 4);
  const Mat V(3, 0);
  const double ridge = 1e-3;
  const Mat W = update_projection(H, X, 0.5, V, 1.0, ridge);
  const double base = projection_objective(H, W, X, 0.5, V, 1.0, ridge);
  for (int s = 0; s < 200; ++s) {
    const Mat P = W + 1e-3 * rng.gaussian_matrix(3, 6);
    CHECK(projection_objective(H, P, X, 0.5, V, 1.0, ridge) >= base);
  }
  CHECK_THROWS_AS(update_projection(H, X, 0.5, V, 1.0, 0.0), SingularityError);
}

TEST_CASE("low-rank basis penalizes exactly the trailing singular values") {
  RngStream rng(4, "fusion-lowrank");
  const Index r = 8;
  std::vector<Mat> W = {rng.gaussian_matrix(r, 12), rng.gaussian_matrix(r, 5)};
  for (Index k : {0, 3, 5, 8}) {
    const auto V = update_lowrank_basis(W, k);
    double expected = 0.0;
    for (const auto& Wm : W) {
      Eigen::JacobiSVD<Mat> svd(Wm);
      const Vec s = svd.singularValues();  // descending
      for (Index i = k; i < s.size(); ++i) expected += s(i) * s(i);
    }
    CHECK(V[0].cols() == r - k);
    CHECK(testutil::gram_defect(V[0]) < 1e-10);
    CHECK(lowrank_penalty(W, V) == doctest::Approx(expected).epsilon(1e-10));
  }
  CHECK_THROWS_AS(update_lowrank_basis(W, -1), ParameterError);
  CHECK_THROWS_AS(update_lowrank_basis(W, r + 1), ParameterError);
}

TEST_CASE("fusion objective matches an explicit loop") {
  RngStream rng(5, "fusion-objective");
  const Index r = 5, n = 9;
  FusionState s;
  s.H = rng.gaussian_matrix(r, n);
  auto views = random_views({4, 7}, n, rng);
  s.W = {rng.gaussian_matrix(r, 4), rng.gaussian_matrix(r, 7)};
  s.mu = (Vec(2) << 0.3, 0.7).finished();
  s.rank_budget = 2;
  s.gamma = 1.5;
  s.V = update_lowrank_basis(s.W, s.rank_budget);

  double expected = 0.0;
  for (int m = 0; m < 2; ++m)
    expected += projection_objective(s.H, s.W[static_cast<std::size_t>(m)], views[static_cast<std::size_t>(m)].data,
                                     s.mu(m), s.V[static_cast<std::size_t>(m)], s.gamma, 0.0);
  CHECK(fusion_objective(s, views) == doctest::Approx(expected).epsilon(1e-12));
}
