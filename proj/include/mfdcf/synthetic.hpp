#pragma once

// Planted-code datasets: user and item ±1 codes are drawn first and every
// observable (ratings, demographics, item labels) is derived from them.

#include "mfdcf/data.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mfdcf {

struct SyntheticSpec {
  Index users = 200;
  Index items = 120;
  Index bits = 16;
  // 0: fully observed S = Bᵀ·D with raw inner products. Otherwise each user
  // rates this many items on a 1..5 scale, biased toward agreeing codes.
  Index ratings_per_user = 0;
  double rating_noise = 0.5;
  int demographic_attributes = 4;  // each reads two code bits
  double demographic_flip = 0.1;
  int label_bits = 8;  // item labels "bit<j>:<sign>"
  double label_flip = 0.05;
  std::uint64_t seed = 0;
  std::string name = "synthetic";
};

struct SyntheticDataset {
  Dataset data;
  Mat user_codes;  // bits×users
  Mat item_codes;  // bits×items
};

SyntheticDataset make_synthetic(const SyntheticSpec& spec);

/// Noisy linear views X_m = G_m·codes + noise·N with Gaussian G_m (d_m×bits).
std::vector<FeatureBlock> planted_views(const Mat& user_codes, const std::vector<Index>& dims,
                                        double noise, std::uint64_t seed);

}  // namespace mfdcf
