#pragma once

#include "mfdcf/numerics.hpp"
#include "mfdcf/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mfdcf {

struct Rating {
  std::int32_t user = 0;
  std::int32_t item = 0;
  double value = 0.0;
  bool implicit = false;  // BookCrossing rating 0

  friend bool operator==(const Rating&, const Rating&) = default;
};

struct RatingScale {
  double min = 1.0;
  double max = 5.0;
  double midpoint() const { return 0.5 * (min + max); }
  friend bool operator==(const RatingScale&, const RatingScale&) = default;
};

/// Sparse n×m user-item ratings, at most one entry per (user, item).
struct RatingMatrix {
  Index rows = 0;  // users
  Index cols = 0;  // items
  std::vector<Rating> entries;
  RatingScale scale;

  std::size_t size() const { return entries.size(); }
  double density() const;
  double sparsity() const { return 1.0 - density(); }

  /// S with unobserved entries as exact zeros. With `symmetric`, ratings are
  /// mapped affinely from [scale.min, scale.max] to [-1, 1].
  SpMat to_sparse(bool symmetric = false) const;

  friend bool operator==(const RatingMatrix&, const RatingMatrix&) = default;
};

/// Per-user categorical attributes. An empty string marks a missing value.
struct DemographicTable {
  std::vector<std::string> attributes;
  std::vector<std::vector<std::string>> values;  // [user][attribute]

  friend bool operator==(const DemographicTable&, const DemographicTable&) = default;
};

struct Dataset {
  std::string name;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  RatingMatrix ratings;
  DemographicTable user_demo;
  std::vector<std::vector<std::string>> item_labels;  // bag-of-words tokens per item

  Index num_users() const { return static_cast<Index>(user_ids.size()); }
  Index num_items() const { return static_cast<Index>(item_ids.size()); }

  /// Throws ReferentialError when an index or a per-user/per-item table is
  /// out of step with the id lists.
  void validate() const;

  /// Item indices rated by each user.
  std::vector<std::vector<std::int32_t>> user_histories() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct DatasetStats {
  Index users = 0;
  Index items = 0;
  std::size_t ratings = 0;
  double sparsity = 0.0;
};
DatasetStats stats(const Dataset& d);

// ---------------------------------------------------------------------------
// Loaders

Dataset load_movielens(const std::string& ratings_path, const std::string& users_path,
                       const std::string& movies_path);

struct BookCrossingOptions {
  int min_user_ratings = 20;
  int min_item_ratings = 20;
  // Drop ratings whose ISBN has no BX-Books.csv row (no side information).
  bool require_book_metadata = true;
};

Dataset load_bookcrossing(const std::string& ratings_path, const std::string& users_path,
                          const std::string& books_path, const BookCrossingOptions& opts = {});

/// Iteratively drops users with fewer than `min_user` ratings and items with
/// fewer than `min_item` raters until nothing changes, then re-indexes densely.
Dataset filter_min_counts(const Dataset& d, int min_user, int min_item);

/// Splits one line of the BookCrossing CSV dialect (';'-separated, optionally
/// double-quoted, NULL allowed).
std::vector<std::string> split_bx_line(const std::string& line);

/// Lower-case ASCII word tokens of a free-text field.
std::vector<std::string> word_tokens(const std::string& text);

/// BookCrossing age → decade bucket label, "" when missing or invalid.
std::string bx_age_bucket(const std::string& raw);

/// Country token of a BookCrossing location string.
std::string bx_country(const std::string& location);

// ---------------------------------------------------------------------------
// Feature views

enum class EncoderKind : std::uint8_t { OneHot = 0, BagOfWordsPca = 1, External = 2 };

struct FeatureBlock {
  int view_index = 0;
  Mat data;  // d_m×n
  EncoderKind encoder = EncoderKind::External;
  Index dim() const { return data.rows(); }
  Index users() const { return data.cols(); }
};

/// Scales every nonzero column to unit L2 norm.
void normalize_columns(Mat& X);

/// One-hot groups per categorical attribute. Categories seen for fewer than
/// `min_count` users share an "other" slot; unseen or missing values encode
/// as an all-zero group.
class DemographicEncoder {
 public:
  DemographicEncoder() = default;
  static DemographicEncoder fit(const DemographicTable& table, int min_count = 1);

  Index dim() const { return dim_; }
  const std::vector<std::string>& attributes() const { return attributes_; }
  const std::vector<std::vector<std::string>>& categories() const { return categories_; }

  /// Raw 0/1 vector for one record ([attribute] → value).
  Vec encode_raw(const std::vector<std::string>& record) const;
  Vec encode_raw(const std::map<std::string, std::string>& record) const;
  /// d×n raw one-hot matrix for a whole table.
  Mat encode_table(const DemographicTable& table) const;

  /// Values folded into the trailing "<other>" slot, per attribute.
  const std::vector<std::vector<std::string>>& aliases() const { return aliases_; }

  static DemographicEncoder from_parts(std::vector<std::string> attributes,
                                       std::vector<std::vector<std::string>> categories,
                                       std::vector<std::vector<std::string>> aliases);

  friend bool operator==(const DemographicEncoder& a, const DemographicEncoder& b) {
    return a.attributes_ == b.attributes_ && a.categories_ == b.categories_ &&
           a.aliases_ == b.aliases_;
  }

 private:
  void rebuild_index();

  std::vector<std::string> attributes_;
  std::vector<std::vector<std::string>> categories_;  // "<other>" last when used
  std::vector<std::vector<std::string>> aliases_;
  std::vector<std::unordered_map<std::string, Index>> lookup_;
  std::vector<Index> offsets_;
  Index dim_ = 0;
};

/// Bag-of-words over the labels of a user's rated items, reduced by PCA.
class InteractionEncoder {
 public:
  InteractionEncoder() = default;

  /// Builds the label vocabulary (labels on at least `min_label_items` items).
  static InteractionEncoder fit_vocabulary(const Dataset& d, int min_label_items = 1);

  Index vocab_size() const { return static_cast<Index>(vocab_.size()); }
  Index dim() const { return pca_.output_dim(); }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  const std::vector<std::vector<std::int32_t>>& item_tokens() const { return item_tokens_; }
  const PcaBasis<double>& pca() const { return pca_; }

  /// vocab×n raw counts; column u counts labels over the items in histories[u].
  SpMat bag_of_words(const std::vector<std::vector<std::int32_t>>& histories) const;

  /// Fits PCA on the given histories and returns target×n (clipped) scores.
  PcaResult<double> fit_pca(const std::vector<std::vector<std::int32_t>>& histories,
                            Index target_dim);

  /// Encodes one history through the stored basis (unnormalized).
  Vec encode(const std::vector<std::int32_t>& history) const;

  static InteractionEncoder from_parts(std::vector<std::string> vocab,
                                       std::vector<std::vector<std::int32_t>> item_tokens,
                                       PcaBasis<double> pca);

  friend bool operator==(const InteractionEncoder& a, const InteractionEncoder& b) {
    return a.vocab_ == b.vocab_ && a.item_tokens_ == b.item_tokens_ &&
           a.pca_.mean == b.pca_.mean && a.pca_.components == b.pca_.components;
  }

 private:
  std::vector<std::string> vocab_;
  std::vector<std::vector<std::int32_t>> item_tokens_;
  PcaBasis<double> pca_;
};

/// Demographic view: raw one-hot, then unit-norm columns.
FeatureBlock encode_demographics(const Dataset& d, const DemographicEncoder& enc,
                                 int view_index = 0);
FeatureBlock encode_demographics(const Dataset& d, int min_count = 1);

/// Interaction-preference view: bag-of-words over rated items' labels, PCA to
/// `target_dim`, then unit-norm columns. Fits `enc`'s PCA basis.
FeatureBlock encode_interaction_preference(const Dataset& d, Index target_dim,
                                           InteractionEncoder& enc, int view_index = 1);
FeatureBlock encode_interaction_preference(const Dataset& d, Index target_dim = 128);

// ---------------------------------------------------------------------------
// Splits

struct SplitSpec {
  double cold_fraction = 0.2;
  std::uint64_t seed = 0;
  int repeats = 5;
  void validate(Index users) const;
};

struct ColdStartSplit {
  Dataset train;
  Dataset test;  // cold users: demographics plus every rating they had
  std::vector<Index> train_users;  // indices into the source dataset, ascending
  std::vector<Index> test_users;
};

/// Keeps the listed users (in the given order) and their ratings; items keep
/// their indices.
Dataset select_users(const Dataset& d, const std::vector<Index>& users);

/// Cold-start split number `repeat`, drawn from seed `spec.seed + repeat`.
ColdStartSplit split_cold_start(const Dataset& d, const SplitSpec& spec, int repeat = 0);

}  // namespace mfdcf
