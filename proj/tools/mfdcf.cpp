// mfdcf: prepare datasets, train, generate cold-start codes, evaluate, sweep
// hyperparameters and benchmark training time.

#include "mfdcf/coldstart.hpp"
#include "mfdcf/data.hpp"
#include "mfdcf/eval.hpp"
#include "mfdcf/io.hpp"
#include "mfdcf/pipeline.hpp"
#include "mfdcf/solver.hpp"
#include "mfdcf/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

namespace fs = std::filesystem;
using namespace mfdcf;

namespace {

constexpr const char* kWorkersEnv = "MFDCF_WORKERS";

struct RunConfig {
  std::string dataset = "movielens";  // movielens | bookcrossing | synthetic
  std::string data_dir = ".";
  std::string out = "mfdcf-out";
  std::string cache;  // default: <out>/dataset.bin
  std::string model;  // default: <out>/model-split<i>.bin

  Hyperparams hyper;

  double cold_fraction = 0.2;
  int repeats = 5;
  int split = -1;  // -1: every split
  std::vector<int> ks = {2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  double positive_threshold = std::nan("");  // NaN: dataset default
  bool implicit_positive = true;

  int min_category_count = -1;  // < 0: dataset default
  Index interaction_dim = 128;
  bool use_demographics = true;
  bool use_interaction = true;

  int bx_min_user_ratings = 20;
  int bx_min_item_ratings = 20;

  Index synthetic_users = 1000;
  Index synthetic_items = 400;
  Index synthetic_bits = 16;
  Index synthetic_ratings_per_user = 40;

  std::string user_record;

  std::vector<double> grid_alpha = {1e-6, 1e-4, 1e-1, 1.0, 10.0, 1e3, 1e6};
  std::vector<double> grid_beta;
  std::vector<double> grid_gamma;
  int best_k = 10;

  std::vector<Index> bench_bits = {8, 16, 32, 64, 128};
  std::vector<double> bench_fractions = {0.25, 0.5, 0.75, 1.0};
  int bench_warmup = 2;
  int bench_iters = 5;
};

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream os;
  for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << std::setprecision(17) << values[i];
  return os.str();
}

using Echo = std::vector<std::pair<std::string, std::string>>;

Echo config_echo(const RunConfig& c, const std::string& command) {
  const Hyperparams& h = c.hyper;
  return {{"command", command},
          {"dataset", c.dataset},
          {"data_dir", c.data_dir},
          {"alpha", num(h.alpha)},
          {"beta", num(h.beta)},
          {"gamma", num(h.gamma)},
          {"lambda", num(h.lambda)},
          {"bits", std::to_string(h.bits)},
          {"rank_budget", std::to_string(h.resolved_rank_budget())},
          {"svd_rank", std::to_string(h.svd_rank)},
          {"max_iters", std::to_string(h.max_iters)},
          {"tol", num(h.tol)},
          {"seed", std::to_string(h.seed)},
          {"cold_fraction", num(c.cold_fraction)},
          {"repeats", std::to_string(c.repeats)},
          {"ks", join(c.ks)},
          {"positive_threshold", std::isnan(c.positive_threshold) ? "default" : num(c.positive_threshold)},
          {"implicit_positive", c.implicit_positive ? "true" : "false"},
          {"interaction_dim", std::to_string(c.interaction_dim)}};
}

nlohmann::ordered_json echo_json(const Echo& echo) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : echo) j[k] = v;
  return j;
}

std::string cache_path(const RunConfig& c) { return c.cache.empty() ? (fs::path(c.out) / "dataset.bin").string() : c.cache; }

std::string model_path(const RunConfig& c, int split) {
  if (!c.model.empty()) return c.model;
  return (fs::path(c.out) / ("model-split" + std::to_string(split) + ".bin")).string();
}

std::string out_file(const RunConfig& c, const std::string& name) { return (fs::path(c.out) / name).string(); }

int worker_count() {
  const char* raw = std::getenv(kWorkersEnv);
  if (!raw || !*raw) return 1;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024)
    throw ParameterError(std::string(kWorkersEnv) + " must be an integer in [1, 1024], got '" + raw + "'");
  return static_cast<int>(v);
}

/// Runs jobs 0..count-1 on up to `workers` threads; rethrows the first failure.
void parallel_for(int count, int workers, const std::function<void(int)>& job) {
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int t = 1; t < std::min(workers, count); ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

void validate(const RunConfig& c) {
  static const std::set<std::string> kDatasets = {"movielens", "bookcrossing", "synthetic"};
  if (!kDatasets.count(c.dataset))
    throw ParameterError("--dataset must be movielens, bookcrossing or synthetic, got '" + c.dataset + "'");
  c.hyper.validate();
  SplitSpec spec{c.cold_fraction, c.hyper.seed, c.repeats};
  if (!(c.cold_fraction > 0.0 && c.cold_fraction < 1.0)) throw ParameterError("--cold-fraction must lie in (0, 1)");
  if (spec.repeats < 1) throw ParameterError("--repeats must be >= 1");
  if (c.split >= c.repeats) throw ParameterError("--split must be below --repeats");
  if (c.ks.empty()) throw ParameterError("--ks must list at least one k");
  for (int k : c.ks)
    if (k < 1) throw ParameterError("--ks entries must be >= 1");
  if (c.interaction_dim < 1) throw ParameterError("--interaction-dim must be >= 1");
  if (c.bench_warmup < 0 || c.bench_iters < 1) throw ParameterError("bench iteration counts out of range");
}

// ---------------------------------------------------------------------------
// Data

std::vector<std::string> raw_files(const RunConfig& c) {
  const fs::path dir(c.data_dir);
  if (c.dataset == "movielens")
    return {(dir / "ratings.dat").string(), (dir / "users.dat").string(), (dir / "movies.dat").string()};
  if (c.dataset == "bookcrossing")
    return {(dir / "BX-Book-Ratings.csv").string(), (dir / "BX-Users.csv").string(), (dir / "BX-Books.csv").string()};
  return {};
}

std::string source_fingerprint(const RunConfig& c) {
  std::ostringstream os;
  os << c.dataset << '|';
  if (c.dataset == "synthetic")
    os << c.synthetic_users << ',' << c.synthetic_items << ',' << c.synthetic_bits << ','
       << c.synthetic_ratings_per_user << ',' << c.hyper.seed;
  else
    os << fingerprint_files(raw_files(c));
  if (c.dataset == "bookcrossing") os << '|' << c.bx_min_user_ratings << ',' << c.bx_min_item_ratings;
  return os.str();
}

Dataset load_raw(const RunConfig& c) {
  if (c.dataset == "synthetic") {
    SyntheticSpec spec;
    spec.users = c.synthetic_users;
    spec.items = c.synthetic_items;
    spec.bits = c.synthetic_bits;
    spec.ratings_per_user = c.synthetic_ratings_per_user;
    spec.seed = c.hyper.seed;
    return make_synthetic(spec).data;
  }
  const auto files = raw_files(c);
  for (const auto& f : files)
    if (!fs::exists(f)) throw std::runtime_error("missing input file " + f);
  if (c.dataset == "movielens") return load_movielens(files[0], files[1], files[2]);
  BookCrossingOptions opts;
  opts.min_user_ratings = c.bx_min_user_ratings;
  opts.min_item_ratings = c.bx_min_item_ratings;
  return load_bookcrossing(files[0], files[1], files[2], opts);
}

Dataset load_prepared(const RunConfig& c) {
  const auto path = cache_path(c);
  if (!fs::exists(path)) throw std::runtime_error("no prepared dataset at " + path + "; run 'mfdcf prepare' first");
  return load_dataset(path).data;
}

ViewOptions view_options(const RunConfig& c, const Dataset& d) {
  ViewOptions v = default_view_options(d);
  if (c.min_category_count >= 0) v.min_category_count = c.min_category_count;
  v.interaction_dim = c.interaction_dim;
  v.demographics = c.use_demographics;
  v.interaction = c.use_interaction;
  return v;
}

PositiveRule positive_rule(const RunConfig& c, const Dataset& d) {
  PositiveRule rule = default_positive_rule(d);
  if (!std::isnan(c.positive_threshold)) rule.threshold = c.positive_threshold;
  rule.implicit_positive = c.implicit_positive;
  return rule;
}

std::vector<int> selected_splits(const RunConfig& c) {
  if (c.split >= 0) return {c.split};
  std::vector<int> out(static_cast<std::size_t>(c.repeats));
  for (int i = 0; i < c.repeats; ++i) out[static_cast<std::size_t>(i)] = i;
  return out;
}

SplitSpec split_spec(const RunConfig& c) { return {c.cold_fraction, c.hyper.seed, c.repeats}; }

// ---------------------------------------------------------------------------
// Commands

int cmd_prepare(const RunConfig& c) {
  const auto path = cache_path(c);
  const auto fingerprint = source_fingerprint(c);
  Dataset d;
  bool hit = false;
  if (fs::exists(path)) {
    try {
      auto cached = load_dataset(path);
      if (cached.fingerprint == fingerprint) {
        d = std::move(cached.data);
        hit = true;
      }
    } catch (const FormatError&) {
      // Stale or foreign file: rebuild below.
    }
  }
  if (!hit) {
    d = load_raw(c);
    save_dataset(path, {d, fingerprint});
  }
  const auto s = stats(d);
  nlohmann::ordered_json doc;
  doc["format_version"] = kReportFormatVersion;
  doc["kind"] = "stats";
  doc["config"] = echo_json(config_echo(c, "prepare"));
  doc["users"] = s.users;
  doc["items"] = s.items;
  doc["ratings"] = s.ratings;
  doc["sparsity_percent"] = 100.0 * s.sparsity;
  write_file_atomic(out_file(c, "stats.json"), doc.dump(2) + "\n");

  std::cout << (hit ? "cache hit: " : "prepared: ") << path << '\n'
            << "users=" << s.users << " items=" << s.items << " ratings=" << s.ratings << " sparsity=" << std::fixed
            << std::setprecision(2) << 100.0 * s.sparsity << "%\n";
  return 0;
}

int cmd_train(const RunConfig& c) {
  const Dataset d = load_prepared(c);
  const auto splits = selected_splits(c);
  const ViewOptions views = view_options(c, d);
  const Echo echo = config_echo(c, "train");
  std::mutex print_mutex;

  parallel_for(static_cast<int>(splits.size()), worker_count(), [&](int job) {
    const int s = splits[static_cast<std::size_t>(job)];
    const ColdStartSplit split = split_cold_start(d, split_spec(c), s);
    std::vector<IterationRecord> log;
    TrainedModel model;
    try {
      model = train_split(split, views, c.hyper, [&](const IterationRecord& r) { log.push_back(r); });
    } catch (const DivergenceError& e) {
      throw std::runtime_error("split " + std::to_string(s) + ": training diverged in step '" + e.step() +
                               "' at iteration " + std::to_string(e.iteration()));
    }
    save_model(model_path(c, s), model);

    std::ostringstream csv;
    csv << "# train-log format_version=" << kReportFormatVersion << '\n';
    for (const auto& [k, v] : echo) csv << "# " << k << '=' << v << '\n';
    csv << "# split=" << s << '\n';
    csv << "iter,objective,relative_change,seconds,constraint_gap\n";
    for (const auto& r : log)
      csv << r.iteration << ',' << num(r.objective) << ',' << num(r.relative_change) << ',' << num(r.seconds) << ','
          << num(r.constraint_gap) << '\n';
    write_file_atomic(out_file(c, "train-log-split" + std::to_string(s) + ".csv"), csv.str());

    std::lock_guard lock(print_mutex);
    std::cout << "split " << s << ": " << model.iterations << " iterations, objective "
              << (log.empty() ? 0.0 : log.back().objective) << ", relative change "
              << (log.empty() ? 0.0 : log.back().relative_change) << " -> " << model_path(c, s) << '\n';
  });
  return 0;
}

int cmd_eval(const RunConfig& c) {
  const Dataset d = load_prepared(c);
  const auto splits = selected_splits(c);
  const PositiveRule rule = positive_rule(c, d);
  const Echo echo = config_echo(c, "eval");

  std::vector<std::vector<EvalReport>> per_split(splits.size());
  parallel_for(static_cast<int>(splits.size()), worker_count(), [&](int job) {
    const int s = splits[static_cast<std::size_t>(job)];
    const auto path = model_path(c, s);
    if (!fs::exists(path)) throw std::runtime_error("missing model " + path + "; run 'mfdcf train' first");
    const TrainedModel model = load_model(path);
    const ColdStartSplit split = split_cold_start(d, split_spec(c), s);
    auto reports = evaluate_split(model, split, c.ks, rule, s, c.hyper.seed);
    for (auto& r : reports) r.config_echo = echo;
    std::ostringstream csv;
    write_reports_csv(csv, reports, {}, echo);
    write_file_atomic(out_file(c, "eval-split" + std::to_string(s) + ".csv"), csv.str());
    per_split[static_cast<std::size_t>(job)] = std::move(reports);
  });

  std::vector<EvalReport> all;
  std::map<std::string, std::vector<EvalReport>> by_method;
  for (const auto& reports : per_split)
    for (const auto& r : reports) {
      all.push_back(r);
      by_method[r.method].push_back(r);
    }
  std::vector<EvalReport> means;
  for (const auto& method : {"mfdcf", "random", "popularity"}) means.push_back(mean_report(by_method.at(method)));

  std::ostringstream csv, json;
  write_reports_csv(csv, all, means, echo);
  write_file_atomic(out_file(c, "eval.csv"), csv.str());
  std::vector<EvalReport> with_means = all;
  with_means.insert(with_means.end(), means.begin(), means.end());
  write_reports_json(json, with_means, echo);
  write_file_atomic(out_file(c, "eval.json"), json.str());

  std::cout << std::left << std::setw(6) << "k";
  for (const auto& m : means) std::cout << std::setw(12) << m.method;
  std::cout << '\n' << std::fixed << std::setprecision(4);
  for (int k : means.front().ks) {
    std::cout << std::setw(6) << k;
    for (const auto& m : means) std::cout << std::setw(12) << m.accuracy.at(k);
    std::cout << '\n';
  }
  return 0;
}

int cmd_coldstart(const RunConfig& c) {
  if (c.user_record.empty()) throw ParameterError("coldstart needs --user-record <file.json>");
  const TrainedModel model = load_model(model_path(c, c.split < 0 ? 0 : c.split));

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(c.user_record));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(c.user_record, 1, e.what());
  }
  if (doc.is_object()) doc = nlohmann::json::array({doc});
  if (!doc.is_array()) throw ParseError(c.user_record, 1, "expected a JSON object or an array of objects");

  nlohmann::ordered_json out;
  out["format_version"] = kReportFormatVersion;
  out["kind"] = "coldstart";
  out["config"] = echo_json(config_echo(c, "coldstart"));
  auto& users = out["users"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& rec = doc[i];
    if (!rec.is_object()) throw ParseError(c.user_record, 1, "user record " + std::to_string(i) + " is not an object");
    std::map<std::string, std::string> record;
    std::optional<std::vector<std::int32_t>> history;
    for (const auto& [key, value] : rec.items()) {
      if (key == "history") {
        history = value.get<std::vector<std::int32_t>>();
      } else if (value.is_string()) {
        record[key] = value.get<std::string>();
      } else if (value.is_number_integer()) {
        record[key] = std::to_string(value.get<long long>());
      } else {
        throw ParseError(c.user_record, 1, "attribute '" + key + "' must be a string or integer");
      }
    }
    const ColdStartBatch batch = encode_new_user(model, record, history);
    const PackedCodes packed = PackedCodes::from_signs(batch.B);
    std::string signs = render_signs(packed);
    signs.pop_back();
    std::vector<double> mu(batch.mu.data(), batch.mu.data() + batch.mu.size());
    users.push_back({{"index", i}, {"code", signs}, {"mu", mu}, {"zero_projection", bool(batch.zero_projection[0])}});
    if (batch.zero_projection[0])
      std::cerr << "warning: user " << i << " has an all-zero fused projection; code defaults to all +1\n";
    std::cout << signs << '\n';
  }
  write_file_atomic(out_file(c, "coldstart.json"), out.dump(2) + "\n");
  return 0;
}

int cmd_grid(const RunConfig& c) {
  const Dataset d = load_prepared(c);
  const PositiveRule rule = positive_rule(c, d);
  const ViewOptions views = view_options(c, d);
  const int split_index = c.split < 0 ? 0 : c.split;
  const ColdStartSplit split = split_cold_start(d, split_spec(c), split_index);

  const auto betas = c.grid_beta.empty() ? std::vector<double>{c.hyper.beta} : c.grid_beta;
  const auto gammas = c.grid_gamma.empty() ? std::vector<double>{c.hyper.gamma} : c.grid_gamma;
  if (c.grid_alpha.empty()) throw ParameterError("--grid-alpha must list at least one value");
  std::set<std::tuple<double, double, double>> unique;
  std::vector<std::tuple<double, double, double>> cells;
  for (double a : c.grid_alpha)
    for (double b : betas)
      for (double g : gammas)
        if (unique.insert({a, b, g}).second) cells.emplace_back(a, b, g);

  std::vector<EvalReport> results(cells.size());
  parallel_for(static_cast<int>(cells.size()), worker_count(), [&](int i) {
    Hyperparams h = c.hyper;
    std::tie(h.alpha, h.beta, h.gamma) = cells[static_cast<std::size_t>(i)];
    const TrainedModel model = train_split(split, views, h);
    results[static_cast<std::size_t>(i)] = evaluate_split(model, split, c.ks, rule, split_index, c.hyper.seed).front();
  });

  const int best_k = std::find(c.ks.begin(), c.ks.end(), c.best_k) != c.ks.end()
                         ? c.best_k
                         : *std::max_element(c.ks.begin(), c.ks.end());
  std::size_t best = 0;
  for (std::size_t i = 1; i < cells.size(); ++i)
    if (results[i].accuracy.at(best_k) > results[best].accuracy.at(best_k)) best = i;

  const Echo echo = config_echo(c, "grid");
  std::ostringstream csv;
  csv << "# grid format_version=" << kReportFormatVersion << '\n';
  for (const auto& [k, v] : echo) csv << "# " << k << '=' << v << '\n';
  csv << "alpha,beta,gamma";
  for (int k : results.front().ks) csv << ",acc@" << k;
  csv << '\n';
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto [a, b, g] = cells[i];
    csv << num(a) << ',' << num(b) << ',' << num(g);
    for (int k : results[i].ks) csv << ',' << num(results[i].accuracy.at(k));
    csv << '\n';
  }
  write_file_atomic(out_file(c, "grid.csv"), csv.str());

  const auto [ba, bb, bg] = cells[best];
  nlohmann::ordered_json doc;
  doc["format_version"] = kReportFormatVersion;
  doc["kind"] = "grid-best";
  doc["config"] = echo_json(echo);
  doc["k"] = best_k;
  doc["alpha"] = ba;
  doc["beta"] = bb;
  doc["gamma"] = bg;
  doc["accuracy"] = results[best].accuracy.at(best_k);
  write_file_atomic(out_file(c, "grid-best.json"), doc.dump(2) + "\n");
  std::cout << cells.size() << " grid cells; best Accuracy@" << best_k << " = " << results[best].accuracy.at(best_k)
            << " at alpha=" << ba << " beta=" << bb << " gamma=" << bg << '\n';
  return 0;
}

int cmd_bench(const RunConfig& c) {
  const Dataset d = load_prepared(c);
  const ColdStartSplit split = split_cold_start(d, split_spec(c), c.split < 0 ? 0 : c.split);
  const ViewOptions views = view_options(c, d);
  BenchOptions options;
  options.bits = c.bench_bits;
  options.fractions = c.bench_fractions;
  options.fraction_bits = c.hyper.bits;
  options.warmup_iterations = c.bench_warmup;
  options.measured_iterations = c.bench_iters;
  options.seed = c.hyper.seed;

  auto input = [&](const std::vector<Index>& users) {
    const Dataset subset = select_users(split.train, users);
    TrainingViews tv = build_training_views(subset, views);
    return std::make_pair(subset.ratings.to_sparse(c.hyper.symmetric_ratings), std::move(tv.blocks));
  };
  const auto records = bench_scaling(split.train.num_users(), input, c.hyper, options);

  std::ostringstream csv;
  write_bench_csv(csv, records, config_echo(c, "bench"));
  write_file_atomic(out_file(c, "bench.csv"), csv.str());

  std::vector<double> logr, logt, users, secs;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    std::cout << "bits=" << r.bits << " fraction=" << r.train_fraction << " users=" << r.users
              << " seconds/iter=" << r.seconds_per_iteration << '\n';
    if (i < c.bench_bits.size()) {
      logr.push_back(std::log(static_cast<double>(r.bits)));
      logt.push_back(std::log(r.seconds_per_iteration));
    } else {
      users.push_back(static_cast<double>(r.users));
      secs.push_back(r.seconds_per_iteration);
    }
  }
  if (logr.size() >= 2) std::cout << "log-log slope of time vs bits: " << fit_line(logr, logt).slope << '\n';
  if (users.size() >= 2) std::cout << "R^2 of time vs users: " << fit_line(users, secs).r_squared << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-feature discrete collaborative filtering"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI file (command-line flags take precedence)");
  app.allow_config_extras(CLI::config_extras_mode::error);

  RunConfig c;
  Hyperparams& h = c.hyper;
  app.add_option("--dataset", c.dataset, "movielens, bookcrossing or synthetic")->capture_default_str();
  app.add_option("--data-dir", c.data_dir, "Directory holding the raw dataset files")->capture_default_str();
  app.add_option("--out", c.out, "Output directory")->capture_default_str();
  app.add_option("--cache", c.cache, "Prepared dataset file (default <out>/dataset.bin)");
  app.add_option("--model", c.model, "Model file (default <out>/model-split<i>.bin)");

  app.add_option("--bits", h.bits, "Code length r")->capture_default_str();
  app.add_option("--alpha", h.alpha, "Rating reconstruction weight")->capture_default_str();
  app.add_option("--beta", h.beta, "Code consistency weight")->capture_default_str();
  app.add_option("--gamma", h.gamma, "Low-rank penalty weight")->capture_default_str();
  app.add_option("--lambda", h.lambda, "Augmented Lagrangian weight")->capture_default_str();
  app.add_option("--rank-budget", h.rank_budget, "Rank budget k (default r/2)");
  app.add_option("--svd-rank", h.svd_rank, "Rank o of the rating-matrix SVD (default min(128, n, m))");
  app.add_option("--max-iters", h.max_iters, "Training iteration cap")->capture_default_str();
  app.add_option("--tol", h.tol, "Relative objective change that stops training")->capture_default_str();
  app.add_option("--seed", h.seed, "Root random seed")->capture_default_str();
  app.add_flag("--symmetric-ratings", h.symmetric_ratings, "Map ratings affinely to [-1, 1] before training");

  app.add_option("--cold-fraction", c.cold_fraction, "Share of users held out as cold-start users")->capture_default_str();
  app.add_option("--repeats", c.repeats, "Number of random splits")->capture_default_str();
  app.add_option("--split", c.split, "Run a single split instead of all");
  app.add_option("--ks", c.ks, "Cut-offs for Accuracy@k")->delimiter(',')->capture_default_str();
  app.add_option("--positive-threshold", c.positive_threshold, "Minimum rating of a favorite item");
  app.add_option("--implicit-positive", c.implicit_positive, "Count implicit feedback as favorite")->capture_default_str();
  app.add_option("--min-category-count", c.min_category_count, "Rarer demographic values share one slot");
  app.add_option("--interaction-dim", c.interaction_dim, "PCA dimension of the interaction view")->capture_default_str();
  app.add_option("--demographics", c.use_demographics, "Use the demographic view")->capture_default_str();
  app.add_option("--interaction", c.use_interaction, "Use the interaction-preference view")->capture_default_str();
  app.add_option("--bx-min-user-ratings", c.bx_min_user_ratings)->capture_default_str();
  app.add_option("--bx-min-item-ratings", c.bx_min_item_ratings)->capture_default_str();
  app.add_option("--synthetic-users", c.synthetic_users)->capture_default_str();
  app.add_option("--synthetic-items", c.synthetic_items)->capture_default_str();
  app.add_option("--synthetic-bits", c.synthetic_bits)->capture_default_str();
  app.add_option("--synthetic-ratings-per-user", c.synthetic_ratings_per_user)->capture_default_str();
  app.add_option("--user-record", c.user_record, "JSON user record(s) for coldstart");
  app.add_option("--grid-alpha", c.grid_alpha)->delimiter(',')->capture_default_str();
  app.add_option("--grid-beta", c.grid_beta, "Default: --beta")->delimiter(',');
  app.add_option("--grid-gamma", c.grid_gamma, "Default: --gamma")->delimiter(',');
  app.add_option("--best-k", c.best_k, "k used to pick the best grid cell")->capture_default_str();
  app.add_option("--bench-bits", c.bench_bits)->delimiter(',')->capture_default_str();
  app.add_option("--bench-fractions", c.bench_fractions)->delimiter(',')->capture_default_str();
  app.add_option("--bench-warmup", c.bench_warmup)->capture_default_str();
  app.add_option("--bench-iters", c.bench_iters)->capture_default_str();

  std::function<int(const RunConfig&)> command;
  auto sub = [&](const char* name, const char* help, int (*fn)(const RunConfig&)) {
    app.add_subcommand(name, help)->fallthrough()->callback([&command, fn] { command = fn; });
  };
  sub("prepare", "Parse raw data and cache it with summary statistics", cmd_prepare);
  sub("train", "Train one model per split", cmd_train);
  sub("coldstart", "Generate codes for new users from JSON records", cmd_coldstart);
  sub("eval", "Accuracy@k of trained models and baselines", cmd_eval);
  sub("grid", "Sweep alpha, beta and gamma", cmd_grid);
  sub("bench", "Time training iterations across code lengths and data sizes", cmd_bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    validate(c);
    return command(c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
