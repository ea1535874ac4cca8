#pragma once

// Top-k recommendation in Hamming space, Accuracy@k, sanity baselines and
// training-time benchmarks.

#include "mfdcf/codes.hpp"
#include "mfdcf/data.hpp"
#include "mfdcf/solver.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mfdcf {

inline constexpr int kReportFormatVersion = 1;

/// Items ranked by descending bᵀd_j (equivalently by Hamming score), ties by
/// ascending index, skipping `exclude` (sorted ascending).
std::vector<std::int32_t> top_k_items(const PackedCodes& users, Index u, const PackedCodes& items, Index k,
                                      const std::vector<std::int32_t>& exclude = {});
std::vector<std::int32_t> top_k_items(const Vec& b, const Mat& D, Index k,
                                      const std::vector<std::int32_t>& exclude = {});

/// Which held-out ratings count as the user's favorite items.
struct PositiveRule {
  double threshold = 4.0;        // explicit rating >= threshold
  bool implicit_positive = true;  // implicit-feedback entries count as positives

  bool operator()(const Rating& r) const { return r.implicit ? implicit_positive : r.value >= threshold; }
  friend bool operator==(const PositiveRule&, const PositiveRule&) = default;
};

/// ≥ 4 for MovieLens-style 1..5 data, ≥ 7 for BookCrossing-style 1..10 data.
PositiveRule default_positive_rule(const Dataset& d);

/// Ranks `k` items for test user `u` while skipping `exclude`.
using Ranker = std::function<std::vector<std::int32_t>(Index u, Index k, const std::vector<std::int32_t>& exclude)>;

struct EvalReport {
  std::string method;
  int split = 0;
  std::vector<int> ks;
  std::map<int, std::int64_t> hits;
  std::map<int, double> accuracy;
  std::int64_t test_cases = 0;
  std::vector<std::pair<std::string, std::string>> config_echo;
};

/// Accuracy@k = #Hit@k / |D_test|, where D_test holds the test ratings that
/// satisfy `rule` and a hit at k means the item is in the user's top k.
/// `train_items[u]` (optional) lists items to exclude for test user u.
EvalReport accuracy_at_k(const Ranker& ranker, const Dataset& test, const std::vector<int>& ks,
                         const PositiveRule& rule, const std::vector<std::vector<std::int32_t>>* train_items = nullptr);

/// Ranker over packed user codes (columns follow the test users) and item codes.
Ranker hamming_ranker(PackedCodes users, PackedCodes items);

/// A seeded random permutation per user.
Ranker baseline_random(Index items, std::uint64_t seed);

/// Items by descending training rating count, ties by index; user-independent.
Ranker baseline_popularity(const Dataset& train);
std::vector<std::int32_t> popularity_order(const Dataset& train);

/// Element-wise mean over per-split reports of one method.
EvalReport mean_report(const std::vector<EvalReport>& reports);

void write_reports_json(std::ostream& out, const std::vector<EvalReport>& reports,
                        const std::vector<std::pair<std::string, std::string>>& config_echo);
/// Columns: k, accuracy, split, method. `split` is "mean" for averaged rows.
void write_reports_csv(std::ostream& out, const std::vector<EvalReport>& reports, const std::vector<EvalReport>& means,
                       const std::vector<std::pair<std::string, std::string>>& config_echo);

// ---------------------------------------------------------------------------
// Benchmarks

struct BenchRecord {
  Index bits = 0;
  double train_fraction = 1.0;
  Index users = 0;
  double seconds_per_iteration = 0.0;
  double stddev_seconds = 0.0;
  std::int64_t peak_rss_bytes = 0;
};

struct BenchOptions {
  std::vector<Index> bits = {8, 16, 32, 64, 128};
  std::vector<double> fractions = {0.25, 0.5, 0.75, 1.0};
  Index fraction_bits = 32;
  int warmup_iterations = 2;
  int measured_iterations = 5;
  std::uint64_t seed = 0;
};

/// Supplies the rating matrix and views for a subset of users.
using BenchInput = std::function<std::pair<SpMat, std::vector<FeatureBlock>>(const std::vector<Index>& users)>;

/// Mean per-iteration wall time after warm-up, for every code length at full
/// data and for every user fraction at `fraction_bits`. Records with
/// train_fraction == 1 and bits == fraction_bits appear in both sweeps.
std::vector<BenchRecord> bench_scaling(Index users, const BenchInput& input, const Hyperparams& base,
                                       const BenchOptions& options);

/// One timed training run (warm-up iterations discarded).
BenchRecord bench_once(const SpMat& S, std::span<const FeatureBlock> views, const Hyperparams& hyper,
                       int warmup_iterations, int measured_iterations);

/// Peak resident set size of this process, 0 when unavailable.
std::int64_t peak_rss_bytes();

void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records,
                     const std::vector<std::pair<std::string, std::string>>& config_echo);

/// Least-squares line y ≈ a·x + b and its R².
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mfdcf
