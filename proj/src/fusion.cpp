#include "mfdcf/fusion.hpp"

#include <string>

namespace mfdcf {

namespace {

void check_views(const Mat& H, std::span<const Mat> W, std::span<const FeatureBlock> views) {
  if (W.size() != views.size()) throw ParameterError("fusion: projection and view counts differ");
  for (std::size_t m = 0; m < views.size(); ++m) {
    if (views[m].users() != H.cols())
      throw ParameterError("fusion: view " + std::to_string(m) + " has the wrong user count");
    if (W[m].rows() != H.rows() || W[m].cols() != views[m].dim())
      throw ParameterError("fusion: projection " + std::to_string(m) + " has the wrong shape");
  }
}

}  // namespace

Vec residual_norms(const Mat& H, std::span<const Mat> W, std::span<const FeatureBlock> views) {
  check_views(H, W, views);
  Vec h(static_cast<Index>(views.size()));
  for (std::size_t m = 0; m < views.size(); ++m) h(static_cast<Index>(m)) = (H - W[m] * views[m].data).norm();
  return h;
}

double weight_objective(const Vec& residuals, const Vec& mu) {
  double total = 0.0;
  for (Index m = 0; m < residuals.size(); ++m) total += residuals(m) * residuals(m) * inverse_weight(mu(m));
  return total;
}

Vec weights_from_residuals(const Vec& residuals) {
  const Index M = residuals.size();
  if (M == 0) throw ParameterError("fusion: no views");
  const double sum = residuals.sum();
  if (!(sum > 0.0)) return Vec::Constant(M, 1.0 / static_cast<double>(M));
  Vec mu = residuals / sum;
  return mu / mu.sum();
}

Vec update_weights(const Mat& H, std::span<const Mat> W, std::span<const FeatureBlock> views) {
  return weights_from_residuals(residual_norms(H, W, views));
}

Mat update_projection(const Mat& H, const Mat& X, double mu, const Mat& V, double gamma, double ridge) {
  const Index r = H.rows();
  const double inv = inverse_weight(mu);
  Mat A = V.cols() > 0 ? Mat(gamma * V * V.transpose()) : Mat(Mat::Zero(r, r));
  Mat B = inv * X * X.transpose();
  B.diagonal().array() += ridge;
  Mat C = inv * H * X.transpose();
  // Products of a matrix with its own transpose can be asymmetric in the last bit.
  A = 0.5 * (A + A.transpose()).eval();
  B = 0.5 * (B + B.transpose()).eval();
  return solve_sylvester(A, B, C);
}

std::vector<Mat> update_projections(const Mat& H, std::span<const FeatureBlock> views, const Vec& mu,
                                    std::span<const Mat> V, double gamma, double ridge) {
  if (static_cast<std::size_t>(mu.size()) != views.size() || V.size() != views.size())
    throw ParameterError("fusion: weight, basis and view counts differ");
  std::vector<Mat> W;
  W.reserve(views.size());
  for (std::size_t m = 0; m < views.size(); ++m) {
    if (views[m].users() != H.cols())
      throw ParameterError("fusion: view " + std::to_string(m) + " has the wrong user count");
    W.push_back(update_projection(H, views[m].data, mu(static_cast<Index>(m)), V[m], gamma, ridge));
  }
  return W;
}

std::vector<Mat> update_lowrank_basis(std::span<const Mat> W, Index rank_budget) {
  std::vector<Mat> V;
  V.reserve(W.size());
  for (const Mat& Wm : W) {
    const Index r = Wm.rows();
    if (rank_budget < 0 || rank_budget > r)
      throw ParameterError("fusion: rank budget " + std::to_string(rank_budget) + " outside [0, " +
                           std::to_string(r) + "]");
    Mat G = Wm * Wm.transpose();
    G = 0.5 * (G + G.transpose()).eval();
    V.push_back(trailing_eigvecs(G, r - rank_budget));
  }
  return V;
}

double lowrank_penalty(std::span<const Mat> W, std::span<const Mat> V) {
  if (W.size() != V.size()) throw ParameterError("fusion: projection and basis counts differ");
  double total = 0.0;
  for (std::size_t m = 0; m < W.size(); ++m) {
    if (V[m].cols() == 0) continue;
    total += (V[m].transpose() * W[m]).squaredNorm();
  }
  return total;
}

double fusion_objective(const FusionState& state, std::span<const FeatureBlock> views) {
  const Vec h = residual_norms(state.H, state.W, views);
  return weight_objective(h, state.mu) + state.gamma * lowrank_penalty(state.W, state.V);
}

}  // namespace mfdcf
