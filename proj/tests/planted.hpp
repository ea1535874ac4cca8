#pragma once

// The separable planted instance: S = Bᵀ·D from planted ±1 codes and two noisy
// linear views of the user codes, split into 200 training and 50 cold users.

#include "mfdcf/numerics.hpp"
#include "mfdcf/solver.hpp"
#include "mfdcf/synthetic.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace testutil {

struct PlantedInstance {
  mfdcf::SyntheticDataset syn;
  mfdcf::ColdStartSplit split;
  std::vector<mfdcf::FeatureBlock> train_views;
  std::vector<mfdcf::Mat> cold_views;
  mfdcf::Mat train_codes;  // planted codes of the training users
};

inline mfdcf::Mat select_columns(const mfdcf::Mat& X, const std::vector<mfdcf::Index>& cols) {
  mfdcf::Mat out(X.rows(), static_cast<mfdcf::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<mfdcf::Index>(i)) = X.col(cols[i]);
  return out;
}

inline PlantedInstance make_planted(std::uint64_t data_seed) {
  using namespace mfdcf;
  PlantedInstance p;
  SyntheticSpec spec;
  spec.users = 250;
  spec.items = 120;
  spec.bits = 16;
  spec.seed = data_seed;
  p.syn = make_synthetic(spec);

  SplitSpec ss;
  ss.cold_fraction = 0.2;
  ss.seed = 0;
  p.split = split_cold_start(p.syn.data, ss, 0);

  for (auto& v : planted_views(p.syn.user_codes, {20, 12}, 0.3, 7)) {
    FeatureBlock b = v;
    b.data = select_columns(v.data, p.split.train_users);
    p.train_views.push_back(std::move(b));
    p.cold_views.push_back(select_columns(v.data, p.split.test_users));
  }
  p.train_codes = select_columns(p.syn.user_codes, p.split.train_users);
  return p;
}

/// Hyperparameters scaled to the planted S, whose entries reach ±r.
inline mfdcf::Hyperparams planted_hyper(double lambda = 100.0) {
  mfdcf::Hyperparams h;
  h.bits = 16;
  h.alpha = 0.03;
  h.beta = 2.0;
  h.gamma = 1.0;
  h.lambda = lambda;
  h.max_iters = 100;
  h.tol = 1e-6;
  return h;
}

/// Mean per-user |cosine| between learned and planted codes after the
/// rotation Q = procrustes(B*·Bᵀ) aligns the learned codes.
inline double aligned_correlation(const mfdcf::Mat& learned, const mfdcf::Mat& planted) {
  using namespace mfdcf;
  const Mat Q = orthogonal_procrustes(Mat(planted * learned.transpose()));
  const Mat aligned = Q * learned;
  double total = 0.0;
  for (Index u = 0; u < aligned.cols(); ++u)
    total += std::abs(aligned.col(u).dot(planted.col(u))) / (aligned.col(u).norm() * planted.col(u).norm());
  return total / static_cast<double>(aligned.cols());
}

}  // namespace testutil
