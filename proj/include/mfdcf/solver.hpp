#pragma once

// Offline training: alternating closed-form updates of the view weights,
// projections, rotation, shared representation, binary codes, low-rank bases
// and the augmented-Lagrangian pair (Z_R, G_R).
//
// The rating matrix S never appears densely. Every product that involves S
// goes through its rank-o factors S ≈ P·Σ·Q and is evaluated so that the
// largest intermediate is r×o, r×n or r×m.

#include "mfdcf/data.hpp"
#include "mfdcf/fusion.hpp"
#include "mfdcf/numerics.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mfdcf {

struct Hyperparams {
  double alpha = 1e3;
  double beta = 10.0;
  double gamma = 1.0;
  double lambda = 1.0;
  Index bits = 32;          // code length r
  Index rank_budget = -1;   // < 0: r / 2
  Index svd_rank = -1;      // < 0: min(128, n, m)
  int max_iters = 50;
  double tol = 1e-4;        // relative objective change
  std::uint64_t seed = 0;
  double ridge = kFeatureRidge;
  bool symmetric_ratings = false;  // map ratings affinely to [-1, 1]

  Index resolved_rank_budget() const { return rank_budget < 0 ? bits / 2 : rank_budget; }
  Index resolved_svd_rank(Index users, Index items) const {
    return svd_rank < 0 ? std::min<Index>({128, users, items}) : svd_rank;
  }
  void validate() const;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct SolverState {
  Mat B;   // r×n, ±1
  Mat D;   // r×m, ±1
  Mat R;   // r×r orthogonal
  Mat ZR;  // r×r orthogonal
  Mat GR;  // r×r multiplier
  double lambda = 1.0;
  TruncatedSVD<double> svd;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double relative_change = 0.0;
  double seconds = 0.0;
  double constraint_gap = 0.0;  // ‖R − Z_R‖_F
};

using ProgressSink = std::function<void(const IterationRecord&)>;
using StateObserver = std::function<void(int iteration, const FusionState&, const SolverState&)>;

/// Encoders a deployed model needs to turn raw user records into views.
struct ModelEncoders {
  std::optional<DemographicEncoder> demographic;
  std::optional<InteractionEncoder> interaction;

  friend bool operator==(const ModelEncoders&, const ModelEncoders&) = default;
};

struct TrainedModel {
  std::string dataset;
  Index users = 0;  // training users
  Index items = 0;
  std::vector<Mat> W;  // per view r×d_m
  Mat D;               // r×m, ±1
  Mat R;               // r×r
  Mat B;               // r×n training-user codes, ±1
  Vec mu;              // final view weights
  Hyperparams hyper;
  std::vector<EncoderKind> view_kinds;
  ModelEncoders encoders;
  int iterations = 0;

  Index bits() const { return D.rows(); }
  Index views() const { return static_cast<Index>(W.size()); }
  void validate() const;
};

/// sgn with sgn(0) = +1.
Mat sign_codes(const Mat& X);

/// Seeded initial states: Gaussian H, orthogonal R = Z_R, G_R = 0, uniform μ,
/// zero projections, empty bases, B = sgn(RH), D = sgn(Gaussian).
std::pair<FusionState, SolverState> init_state(std::span<const FeatureBlock> views,
                                               const TruncatedSVD<double>& svdS, const Hyperparams& hyper);

/// The matrix C whose Procrustes solution is the rotation update.
Mat rotation_target(const SolverState& s, const FusionState& f, const Hyperparams& hyper);
Mat update_rotation(const SolverState& s, const FusionState& f, const Hyperparams& hyper);

/// Closed-form minimizer over H with everything else fixed.
Mat update_H(const SolverState& s, const FusionState& f, std::span<const FeatureBlock> views,
             const Hyperparams& hyper);

Mat update_B(const Mat& R, const Mat& H);

/// R·(HHᵀ + ridge·I)⁻¹·H·P·Σ·Q, the least-squares item factor before sgn.
Mat item_code_regression(const Mat& R, const Mat& H, const TruncatedSVD<double>& svdS,
                         double ridge = kFeatureRidge);
Mat update_D(const Mat& R, const Mat& H, const TruncatedSVD<double>& svdS, double ridge = kFeatureRidge);

/// The matrix whose Procrustes solution is the Z_R update.
Mat auxiliary_target(const SolverState& s, const FusionState& f, const Hyperparams& hyper);
Mat update_ZR(const SolverState& s, const FusionState& f, const Hyperparams& hyper);

Mat update_GR(const SolverState& s);

struct ObjectiveTerms {
  double fusion = 0.0;        // Σ (1/μ)‖H − WX‖²
  double rating = 0.0;        // α‖S − HᵀRᵀD‖²
  double consistency = 0.0;   // β‖B − RH‖²
  double lowrank = 0.0;       // γ Σ tr(VᵀWWᵀV)
  double augmented = 0.0;     // (λ/2)‖R − Z_R + G_R/λ‖²
  double total() const { return fusion + rating + consistency + lowrank + augmented; }
};

ObjectiveTerms objective_terms(const FusionState& f, const SolverState& s, std::span<const FeatureBlock> views,
                               const Hyperparams& hyper);
double objective(const FusionState& f, const SolverState& s, std::span<const FeatureBlock> views,
                 const Hyperparams& hyper);

struct TrainOptions {
  ProgressSink progress;
  StateObserver observer;
  SvdOptions svd;
};

/// Runs the full alternating scheme on a rating matrix and its user views.
TrainedModel train(const SpMat& S, std::span<const FeatureBlock> views, const Hyperparams& hyper,
                   const TrainOptions& options = {});
TrainedModel train(const Dataset& dataset, std::span<const FeatureBlock> views, const Hyperparams& hyper,
                   ProgressSink progress_sink = {});

}  // namespace mfdcf
