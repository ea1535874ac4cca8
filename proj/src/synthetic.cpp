#include "mfdcf/synthetic.hpp"

#include "mfdcf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mfdcf {

namespace {

Mat sign_matrix(Index rows, Index cols, RngStream& rng) {
  Mat out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return out;
}

}  // namespace

SyntheticDataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.users < 2 || spec.items < 1 || spec.bits < 1)
    throw ParameterError("synthetic: users >= 2, items >= 1 and bits >= 1 required");
  if (spec.ratings_per_user > spec.items)
    throw ParameterError("synthetic: ratings_per_user exceeds the item count");

  SyntheticDataset out;
  RngStream code_rng(spec.seed, "synthetic-codes");
  out.user_codes = sign_matrix(spec.bits, spec.users, code_rng);
  out.item_codes = sign_matrix(spec.bits, spec.items, code_rng);

  Dataset& d = out.data;
  d.name = spec.name;
  for (Index u = 0; u < spec.users; ++u) d.user_ids.push_back("u" + std::to_string(u));
  for (Index i = 0; i < spec.items; ++i) d.item_ids.push_back("i" + std::to_string(i));
  d.ratings.rows = spec.users;
  d.ratings.cols = spec.items;

  const double r = static_cast<double>(spec.bits);
  if (spec.ratings_per_user == 0) {
    d.ratings.scale = {-r, r};
    for (Index u = 0; u < spec.users; ++u)
      for (Index i = 0; i < spec.items; ++i)
        d.ratings.entries.push_back({static_cast<std::int32_t>(u), static_cast<std::int32_t>(i),
                                     out.user_codes.col(u).dot(out.item_codes.col(i)), false});
  } else {
    d.ratings.scale = {1.0, 5.0};
    RngStream rate_rng(spec.seed, "synthetic-ratings");
    std::vector<std::pair<double, Index>> keys(static_cast<std::size_t>(spec.items));
    for (Index u = 0; u < spec.users; ++u) {
      // Weighted sampling without replacement (exponential keys).
      for (Index i = 0; i < spec.items; ++i) {
        const double agree = out.user_codes.col(u).dot(out.item_codes.col(i)) / r;
        const double weight = std::exp(2.0 * agree);
        keys[static_cast<std::size_t>(i)] = {-std::log(std::max(rate_rng.uniform(), 1e-300)) / weight, i};
      }
      std::partial_sort(keys.begin(), keys.begin() + spec.ratings_per_user, keys.end());
      std::vector<Index> chosen;
      for (Index k = 0; k < spec.ratings_per_user; ++k) chosen.push_back(keys[static_cast<std::size_t>(k)].second);
      std::sort(chosen.begin(), chosen.end());
      for (Index i : chosen) {
        const double agree = out.user_codes.col(u).dot(out.item_codes.col(i)) / r;
        const double raw = 3.0 + 2.0 * agree + spec.rating_noise * rate_rng.gaussian();
        d.ratings.entries.push_back({static_cast<std::int32_t>(u), static_cast<std::int32_t>(i),
                                     std::clamp(std::round(raw), 1.0, 5.0), false});
      }
    }
  }

  RngStream demo_rng(spec.seed, "synthetic-demographics");
  for (int a = 0; a < spec.demographic_attributes; ++a) d.user_demo.attributes.push_back("a" + std::to_string(a));
  for (Index u = 0; u < spec.users; ++u) {
    std::vector<std::string> row;
    for (int a = 0; a < spec.demographic_attributes; ++a) {
      std::string value;
      for (int b = 0; b < 2; ++b) {
        double bit = out.user_codes((2 * a + b) % spec.bits, u);
        if (demo_rng.uniform() < spec.demographic_flip) bit = -bit;
        value.push_back(bit > 0 ? 'p' : 'n');
      }
      row.push_back(value);
    }
    d.user_demo.values.push_back(std::move(row));
  }

  RngStream label_rng(spec.seed, "synthetic-labels");
  d.item_labels.resize(static_cast<std::size_t>(spec.items));
  for (Index i = 0; i < spec.items; ++i) {
    for (int j = 0; j < spec.label_bits; ++j) {
      double bit = out.item_codes(j % spec.bits, i);
      if (label_rng.uniform() < spec.label_flip) bit = -bit;
      d.item_labels[static_cast<std::size_t>(i)].push_back("bit" + std::to_string(j) + (bit > 0 ? ":+" : ":-"));
    }
  }
  d.validate();
  return out;
}

std::vector<FeatureBlock> planted_views(const Mat& user_codes, const std::vector<Index>& dims, double noise,
                                        std::uint64_t seed) {
  std::vector<FeatureBlock> views;
  for (std::size_t v = 0; v < dims.size(); ++v) {
    RngStream rng(seed, "planted-view", v);
    Mat G = rng.gaussian_matrix(dims[v], user_codes.rows());
    FeatureBlock block;
    block.view_index = static_cast<int>(v);
    block.encoder = EncoderKind::External;
    block.data = G * user_codes + noise * rng.gaussian_matrix(dims[v], user_codes.cols());
    views.push_back(std::move(block));
  }
  return views;
}

}  // namespace mfdcf
