#pragma once

// Codes for users that have no ratings, generated from their content views
// with the trained projections and per-user self-weighting.

#include "mfdcf/solver.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mfdcf {

struct ColdStartOptions {
  int max_iters = 20;
};

struct ColdStartBatch {
  std::vector<Mat> X;  // per view, d_m×n_u
  Mat B;               // r×n_u, ±1
  Mat mu;              // M×n_u, each column on the simplex
  // Users whose fused projection was exactly zero; their code is all +1.
  std::vector<bool> zero_projection;
  int iterations = 0;

  Index users() const { return B.cols(); }
};

/// R·W_m: maps view m into code space (codes track R·H, and H tracks W_m·X_m).
Mat code_projection(const TrainedModel& model, Index view);

/// With P_m = code_projection(model, m), alternates μ_u = h_u/Σh_u where
/// h_u^(m) = ‖b_u − P_m x_u^(m)‖, and b_u = sgn(Σ_m P_m x_u^(m) / μ_u^(m)),
/// starting from uniform μ_u, until no code changes or `max_iters` passes.
/// Each user is solved independently.
ColdStartBatch generate_user_codes(const TrainedModel& model, std::vector<Mat> X,
                                   const ColdStartOptions& options = {});

/// The cold-start objective Σ_m ‖b_u − P_m x_u‖² / μ_u for one user column.
double coldstart_objective(const TrainedModel& model, std::span<const Mat> X, Index user, const Vec& b,
                           const Vec& mu);

/// Builds every view of `users` through the model's stored encoders.
/// Demographic views come from the table; interaction views come from
/// `histories` when given and are all-zero otherwise.
std::vector<Mat> encode_user_views(const TrainedModel& model, const DemographicTable& users,
                                   const std::vector<std::vector<std::int32_t>>* histories = nullptr);

/// One new user from a key-value demographic record and optional history.
ColdStartBatch encode_new_user(const TrainedModel& model, const std::map<std::string, std::string>& record,
                               const std::optional<std::vector<std::int32_t>>& history = std::nullopt,
                               const ColdStartOptions& options = {});

}  // namespace mfdcf
