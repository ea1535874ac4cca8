#pragma once

// Self-weighted fusion of M content views into a shared r×n representation H.

#include "mfdcf/data.hpp"
#include "mfdcf/numerics.hpp"

#include <span>
#include <vector>

namespace mfdcf {

/// Smallest weight used when a view weight is inverted.
inline constexpr double kWeightFloor = 1e-12;
/// Diagonal ridge on the feature Gram matrix in the projection solve.
inline constexpr double kFeatureRidge = 1e-6;

struct FusionState {
  Mat H;               // r×n consensus representation
  std::vector<Mat> W;  // per view, r×d_m
  Vec mu;              // view weights on the simplex
  std::vector<Mat> V;  // per view, r×(r − rank_budget), orthonormal columns
  Index rank_budget = 0;
  double gamma = 1.0;

  Index bits() const { return H.rows(); }
  Index views() const { return static_cast<Index>(W.size()); }
};

/// 1 / max(μ, kWeightFloor).
inline double inverse_weight(double mu) { return 1.0 / std::max(mu, kWeightFloor); }

/// h_m = ‖H − W_m·X_m‖_F for every view.
Vec residual_norms(const Mat& H, std::span<const Mat> W, std::span<const FeatureBlock> views);

/// Σ_m h_m² / μ_m, the weight subproblem.
double weight_objective(const Vec& residuals, const Vec& mu);

/// μ_m = h_m / Σ h. Uniform when every residual is zero.
Vec update_weights(const Mat& H, std::span<const Mat> W, std::span<const FeatureBlock> views);
Vec weights_from_residuals(const Vec& residuals);

/// Minimizer of (1/μ)‖H − W·X‖² + γ·tr(VᵀWWᵀV) + ridge·‖W‖² for one view,
/// through the Sylvester equation γVVᵀ·W + W·((1/μ)XXᵀ + ridge·I) = (1/μ)HXᵀ.
Mat update_projection(const Mat& H, const Mat& X, double mu, const Mat& V, double gamma,
                      double ridge = kFeatureRidge);

std::vector<Mat> update_projections(const Mat& H, std::span<const FeatureBlock> views, const Vec& mu,
                                    std::span<const Mat> V, double gamma, double ridge = kFeatureRidge);

/// V_m = eigenvectors of W_m·W_mᵀ for its r − rank_budget smallest eigenvalues.
std::vector<Mat> update_lowrank_basis(std::span<const Mat> W, Index rank_budget);

/// Σ_m tr(V_mᵀ·W_m·W_mᵀ·V_m).
double lowrank_penalty(std::span<const Mat> W, std::span<const Mat> V);

/// Σ_m (1/μ_m)‖H − W_m·X_m‖² + γ·Σ_m tr(V_mᵀW_mW_mᵀV_m).
double fusion_objective(const FusionState& state, std::span<const FeatureBlock> views);

}  // namespace mfdcf
