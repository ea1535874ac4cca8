#include "mfdcf/eval.hpp"

#include "mfdcf/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <limits>
#include <sstream>

namespace mfdcf {

namespace {

std::vector<std::int32_t> select_top(std::vector<std::pair<Index, std::int32_t>>& scored, Index k) {
  // Higher score first, then lower index.
  auto better = [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; };
  std::partial_sort(scored.begin(), scored.begin() + k, scored.end(), better);
  std::vector<std::int32_t> out;
  out.reserve(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) out.push_back(scored[static_cast<std::size_t>(i)].second);
  return out;
}

void check_k(Index k, Index items, const std::vector<std::int32_t>& exclude) {
  if (k < 0) throw ParameterError("top_k_items: k must be >= 0");
  if (!std::is_sorted(exclude.begin(), exclude.end()))
    throw ParameterError("top_k_items: exclude list must be sorted");
  if (k > items - static_cast<Index>(exclude.size()))
    throw ParameterError("top_k_items: k = " + std::to_string(k) + " exceeds the " +
                         std::to_string(items - static_cast<Index>(exclude.size())) + " rankable items");
}

template <typename ScoreFn>
std::vector<std::int32_t> rank_items(Index items, Index k, const std::vector<std::int32_t>& exclude, ScoreFn score) {
  check_k(k, items, exclude);
  std::vector<std::pair<Index, std::int32_t>> scored;
  scored.reserve(static_cast<std::size_t>(items));
  auto skip = exclude.begin();
  for (Index j = 0; j < items; ++j) {
    while (skip != exclude.end() && *skip < j) ++skip;
    if (skip != exclude.end() && *skip == j) continue;
    scored.emplace_back(score(j), static_cast<std::int32_t>(j));
  }
  return select_top(scored, k);
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void write_comment_header(std::ostream& out, const char* kind,
                          const std::vector<std::pair<std::string, std::string>>& config_echo) {
  out << "# " << kind << " format_version=" << kReportFormatVersion << '\n';
  for (const auto& [key, value] : config_echo) out << "# " << key << '=' << value << '\n';
}

}  // namespace

std::vector<std::int32_t> top_k_items(const PackedCodes& users, Index u, const PackedCodes& items, Index k,
                                      const std::vector<std::int32_t>& exclude) {
  if (users.bits() != items.bits()) throw ParameterError("top_k_items: code lengths differ");
  const auto b = users.code(u);
  const Index r = users.bits();
  return rank_items(items.size(), k, exclude, [&](Index j) { return code_inner_product(b, items.code(j), r); });
}

std::vector<std::int32_t> top_k_items(const Vec& b, const Mat& D, Index k, const std::vector<std::int32_t>& exclude) {
  const PackedCodes users = PackedCodes::from_signs(b);
  return top_k_items(users, 0, PackedCodes::from_signs(D), k, exclude);
}

PositiveRule default_positive_rule(const Dataset& d) {
  const RatingScale& s = d.ratings.scale;
  PositiveRule rule;
  if (s.min == 1.0 && s.max == 10.0)
    rule.threshold = 7.0;
  else
    rule.threshold = s.min + 0.75 * (s.max - s.min);  // 4 on a 1..5 scale
  return rule;
}

EvalReport accuracy_at_k(const Ranker& ranker, const Dataset& test, const std::vector<int>& ks,
                         const PositiveRule& rule, const std::vector<std::vector<std::int32_t>>* train_items) {
  if (ks.empty()) throw ParameterError("accuracy_at_k: no k values");
  for (int k : ks)
    if (k < 1) throw ParameterError("accuracy_at_k: k must be >= 1");
  const Index n = test.num_users();
  if (train_items && static_cast<Index>(train_items->size()) != n)
    throw ParameterError("accuracy_at_k: train item lists do not match the test users");

  std::vector<std::vector<std::int32_t>> positives(static_cast<std::size_t>(n));
  std::int64_t cases = 0;
  for (const auto& r : test.ratings.entries)
    if (rule(r)) {
      positives[static_cast<std::size_t>(r.user)].push_back(r.item);
      ++cases;
    }
  if (cases == 0) throw ParameterError("accuracy_at_k: the test set has no positive ratings");

  EvalReport report;
  report.ks = ks;
  std::sort(report.ks.begin(), report.ks.end());
  report.ks.erase(std::unique(report.ks.begin(), report.ks.end()), report.ks.end());
  report.test_cases = cases;
  for (int k : report.ks) report.hits[k] = 0;

  const int kmax = report.ks.back();
  static const std::vector<std::int32_t> kNoExclusions;
  for (Index u = 0; u < n; ++u) {
    const auto& pos = positives[static_cast<std::size_t>(u)];
    if (pos.empty()) continue;
    const auto& exclude = train_items ? (*train_items)[static_cast<std::size_t>(u)] : kNoExclusions;
    const Index rankable = test.num_items() - static_cast<Index>(exclude.size());
    // Rankings are prefixes of one another, so a single top-kmax list serves every k.
    const auto ranked = ranker(u, std::min<Index>(kmax, rankable), exclude);
    std::vector<Index> position(static_cast<std::size_t>(test.num_items()), -1);
    for (std::size_t p = 0; p < ranked.size(); ++p) position[static_cast<std::size_t>(ranked[p])] = static_cast<Index>(p);
    for (auto item : pos) {
      const Index p = position[static_cast<std::size_t>(item)];
      if (p < 0) continue;
      for (int k : report.ks)
        if (p < k) ++report.hits[k];
    }
  }
  for (int k : report.ks)
    report.accuracy[k] = static_cast<double>(report.hits[k]) / static_cast<double>(cases);
  return report;
}

Ranker hamming_ranker(PackedCodes users, PackedCodes items) {
  if (users.bits() != items.bits()) throw ParameterError("hamming_ranker: code lengths differ");
  return [users = std::move(users), items = std::move(items)](Index u, Index k, const std::vector<std::int32_t>& exclude) {
    if (u < 0 || u >= users.size()) throw ParameterError("hamming_ranker: no code for test user " + std::to_string(u));
    return top_k_items(users, u, items, k, exclude);
  };
}

Ranker baseline_random(Index items, std::uint64_t seed) {
  return [items, seed](Index u, Index k, const std::vector<std::int32_t>& exclude) {
    check_k(k, items, exclude);
    std::vector<std::int32_t> order(static_cast<std::size_t>(items));
    std::iota(order.begin(), order.end(), 0);
    RngStream rng(seed, "baseline-random", static_cast<std::uint64_t>(u));
    std::shuffle(order.begin(), order.end(), rng.engine());
    std::vector<std::int32_t> out;
    for (auto item : order) {
      if (static_cast<Index>(out.size()) == k) break;
      if (!std::binary_search(exclude.begin(), exclude.end(), item)) out.push_back(item);
    }
    return out;
  };
}

std::vector<std::int32_t> popularity_order(const Dataset& train) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(train.num_items()), 0);
  for (const auto& r : train.ratings.entries) ++counts[static_cast<std::size_t>(r.item)];
  std::vector<std::int32_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
  });
  return order;
}

Ranker baseline_popularity(const Dataset& train) {
  return [order = popularity_order(train)](Index, Index k, const std::vector<std::int32_t>& exclude) {
    check_k(k, static_cast<Index>(order.size()), exclude);
    std::vector<std::int32_t> out;
    for (auto item : order) {
      if (static_cast<Index>(out.size()) == k) break;
      if (!std::binary_search(exclude.begin(), exclude.end(), item)) out.push_back(item);
    }
    return out;
  };
}

EvalReport mean_report(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw ParameterError("mean_report: no reports");
  EvalReport mean;
  mean.method = reports.front().method;
  mean.split = -1;
  mean.ks = reports.front().ks;
  mean.config_echo = reports.front().config_echo;
  for (const auto& r : reports) {
    if (r.ks != mean.ks) throw ParameterError("mean_report: reports use different k values");
    mean.test_cases += r.test_cases;
    for (int k : r.ks) {
      mean.hits[k] += r.hits.at(k);
      mean.accuracy[k] += r.accuracy.at(k) / static_cast<double>(reports.size());
    }
  }
  return mean;
}

void write_reports_json(std::ostream& out, const std::vector<EvalReport>& reports,
                        const std::vector<std::pair<std::string, std::string>>& config_echo) {
  nlohmann::ordered_json doc;
  doc["format_version"] = kReportFormatVersion;
  doc["kind"] = "eval";
  auto& cfg = doc["config"] = nlohmann::ordered_json::object();
  for (const auto& [key, value] : config_echo) cfg[key] = value;
  auto& list = doc["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json entry;
    entry["method"] = r.method;
    entry["split"] = r.split < 0 ? nlohmann::ordered_json("mean") : nlohmann::ordered_json(r.split);
    entry["test_cases"] = r.test_cases;
    auto& rows = entry["results"] = nlohmann::ordered_json::array();
    for (int k : r.ks) rows.push_back({{"k", k}, {"hits", r.hits.at(k)}, {"accuracy", r.accuracy.at(k)}});
    list.push_back(std::move(entry));
  }
  out << doc.dump(2) << '\n';
}

void write_reports_csv(std::ostream& out, const std::vector<EvalReport>& reports, const std::vector<EvalReport>& means,
                       const std::vector<std::pair<std::string, std::string>>& config_echo) {
  write_comment_header(out, "eval", config_echo);
  out << "k,accuracy,split,method\n";
  auto emit = [&](const EvalReport& r, const std::string& split) {
    for (int k : r.ks) out << k << ',' << format_double(r.accuracy.at(k)) << ',' << split << ',' << r.method << '\n';
  };
  for (const auto& r : reports) emit(r, std::to_string(r.split));
  for (const auto& r : means) emit(r, "mean");
}

// ---------------------------------------------------------------------------
// Benchmarks

std::int64_t peak_rss_bytes() {
  std::ifstream status("/proc/self/status");
  std::string line;
  while (std::getline(status, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      std::istringstream is(line.substr(6));
      std::int64_t kb = 0;
      is >> kb;
      return kb * 1024;
    }
  }
  return 0;
}

BenchRecord bench_once(const SpMat& S, std::span<const FeatureBlock> views, const Hyperparams& hyper,
                       int warmup_iterations, int measured_iterations) {
  if (warmup_iterations < 0 || measured_iterations < 1)
    throw ParameterError("bench: need >= 0 warm-up and >= 1 measured iterations");
  Hyperparams h = hyper;
  h.max_iters = warmup_iterations + measured_iterations;
  h.tol = std::numeric_limits<double>::min();  // run every iteration

  std::vector<double> seconds;
  TrainOptions options;
  options.progress = [&](const IterationRecord& rec) {
    if (rec.iteration > warmup_iterations) seconds.push_back(rec.seconds);
  };
  train(S, views, h, options);
  if (seconds.empty()) throw NumericError("bench: training stopped before any measured iteration");

  BenchRecord rec;
  rec.bits = h.bits;
  rec.users = S.rows();
  double mean = 0.0;
  for (double s : seconds) mean += s;
  mean /= static_cast<double>(seconds.size());
  double var = 0.0;
  for (double s : seconds) var += (s - mean) * (s - mean);
  rec.seconds_per_iteration = mean;
  rec.stddev_seconds = seconds.size() > 1 ? std::sqrt(var / static_cast<double>(seconds.size() - 1)) : 0.0;
  rec.peak_rss_bytes = peak_rss_bytes();
  return rec;
}

std::vector<BenchRecord> bench_scaling(Index users, const BenchInput& input, const Hyperparams& base,
                                       const BenchOptions& options) {
  std::vector<Index> all(static_cast<std::size_t>(users));
  std::iota(all.begin(), all.end(), 0);

  std::vector<BenchRecord> out;
  auto run = [&](const std::vector<Index>& subset, Index bits, double fraction) {
    auto [S, views] = input(subset);
    Hyperparams h = base;
    h.bits = bits;
    h.rank_budget = base.rank_budget < 0 ? -1 : std::min(base.rank_budget, bits);
    BenchRecord rec = bench_once(S, views, h, options.warmup_iterations, options.measured_iterations);
    rec.train_fraction = fraction;
    out.push_back(rec);
  };

  for (Index bits : options.bits) run(all, bits, 1.0);

  std::vector<Index> order = all;
  RngStream rng(options.seed, "bench-subset");
  std::shuffle(order.begin(), order.end(), rng.engine());
  for (double fraction : options.fractions) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ParameterError("bench: fractions must lie in (0, 1]");
    const auto count = std::max<Index>(2, static_cast<Index>(std::llround(fraction * static_cast<double>(users))));
    std::vector<Index> subset(order.begin(), order.begin() + std::min(count, users));
    std::sort(subset.begin(), subset.end());
    run(subset, options.fraction_bits, fraction);
  }
  return out;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records,
                     const std::vector<std::pair<std::string, std::string>>& config_echo) {
  write_comment_header(out, "bench", config_echo);
  out << "bits,train_fraction,users,seconds_per_iteration,stddev_seconds,peak_rss_bytes\n";
  for (const auto& r : records)
    out << r.bits << ',' << format_double(r.train_fraction) << ',' << r.users << ','
        << format_double(r.seconds_per_iteration) << ',' << format_double(r.stddev_seconds) << ','
        << r.peak_rss_bytes << '\n';
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("fit_line: need at least two matching points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw ParameterError("fit_line: x values are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace mfdcf
