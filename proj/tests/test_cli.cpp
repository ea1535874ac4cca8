#include "mfdcf/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace mfdcf;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int status = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + MFDCF_CLI + std::string(" ") + args + " 2>&1";
  RunResult result;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) result.output.append(buf, n);
  const int raw = ::pclose(pipe);
  result.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return result;
}

struct Workspace {
  fs::path root;
  explicit Workspace(const std::string& tag) {
    root = fs::temp_directory_path() / ("mfdcf-cli-" + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string dir(const std::string& name) const { return (root / name).string(); }
};

// CLI11 rejects a repeated option, so the varied flags stay out of kBase.
const std::string kBase =
    " --dataset synthetic --synthetic-items 60 --synthetic-bits 8 --synthetic-ratings-per-user 15"
    " --bits 8 --alpha 0.05 --beta 2 --repeats 2 --interaction-dim 8 --ks 2,5,10";
const std::string kSmall = kBase + " --synthetic-users 120 --max-iters 5";

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Data rows of a CSV file with '#' comments and a header line.
std::vector<std::vector<std::string>> csv_rows(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("prepare writes statistics and reuses its cache") {
  Workspace ws("prepare");
  const auto out = ws.dir("out");
  const auto first = run("prepare --out " + out + kSmall);
  REQUIRE(first.status == 0);
  CHECK(first.output.find("prepared:") != std::string::npos);
  CHECK(first.output.find("users=120 items=60 ratings=1800") != std::string::npos);

  const auto stats = nlohmann::json::parse(slurp(out + "/stats.json"));
  CHECK(stats["kind"] == "stats");
  CHECK(stats["users"] == 120);
  CHECK(stats["ratings"] == 1800);
  CHECK(stats["sparsity_percent"].get<double>() == doctest::Approx(75.0));

  const auto second = run("prepare --out " + out + kSmall);
  REQUIRE(second.status == 0);
  CHECK(second.output.find("cache hit:") != std::string::npos);

  // A different generator configuration invalidates the cache.
  const auto third = run("prepare --out " + out + kBase + " --synthetic-users 100");
  REQUIRE(third.status == 0);
  CHECK(third.output.find("prepared:") != std::string::npos);
}

TEST_CASE("training is deterministic across runs and worker counts") {
  Workspace ws("train");
  for (const char* name : {"a", "b"}) {
    const auto out = ws.dir(name);
    REQUIRE(run("prepare --out " + out + kSmall).status == 0);
    const auto env = std::string(name) == "a" ? "" : "MFDCF_WORKERS=2";
    const auto r = run("train --out " + out + kSmall, env);
    REQUIRE(r.status == 0);
  }
  for (int split = 0; split < 2; ++split) {
    const auto file = "/model-split" + std::to_string(split) + ".bin";
    const auto a = slurp(ws.dir("a") + file);
    CHECK(!a.empty());
    CHECK(a == slurp(ws.dir("b") + file));
  }
  const auto model = load_model(ws.dir("a") + "/model-split0.bin");
  CHECK(model.bits() == 8);
  CHECK(model.hyper.alpha == 0.05);
  CHECK(fs::exists(ws.dir("a") + "/train-log-split1.csv"));
}

TEST_CASE("eval means are the average of the per-split values") {
  Workspace ws("eval");
  const auto out = ws.dir("out");
  REQUIRE(run("prepare --out " + out + kSmall).status == 0);
  REQUIRE(run("train --out " + out + kSmall).status == 0);
  const auto r = run("eval --out " + out + kSmall);
  REQUIRE(r.status == 0);

  // (method, k) → per-split accuracies and the reported mean.
  std::map<std::pair<std::string, std::string>, std::vector<double>> per_split;
  std::map<std::pair<std::string, std::string>, double> means;
  for (const auto& row : csv_rows(out + "/eval.csv")) {
    REQUIRE(row.size() == 4);
    const auto key = std::make_pair(row[3], row[0]);
    if (row[2] == "mean")
      means[key] = std::stod(row[1]);
    else
      per_split[key].push_back(std::stod(row[1]));
  }
  REQUIRE(means.size() == 9);  // three methods × three cut-offs
  for (const auto& [key, values] : per_split) {
    REQUIRE(values.size() == 2);
    CHECK(means.at(key) == doctest::Approx((values[0] + values[1]) / 2).epsilon(1e-12));
  }
  const auto doc = nlohmann::json::parse(slurp(out + "/eval.json"));
  CHECK(doc["format_version"] == 1);
  CHECK(fs::exists(out + "/eval-split0.csv"));
}

TEST_CASE("grid deduplicates cells and reports the best one") {
  Workspace ws("grid");
  const auto out = ws.dir("out");
  REQUIRE(run("prepare --out " + out + kSmall).status == 0);

  const auto r = run("grid --out " + out + kSmall + " --grid-alpha 0.01,0.05,0.05 --grid-beta 1,2 --best-k 5",
                     "MFDCF_WORKERS=2");
  REQUIRE(r.status == 0);
  const auto rows = csv_rows(out + "/grid.csv");
  REQUIRE(rows.size() == 4);
  double best = -1.0;
  for (const auto& row : rows) best = std::max(best, std::stod(row[4]));  // acc@5
  const auto doc = nlohmann::json::parse(slurp(out + "/grid-best.json"));
  CHECK(doc["k"] == 5);
  CHECK(doc["accuracy"].get<double>() == doctest::Approx(best).epsilon(1e-12));

  const auto full = run("grid --out " + out + kBase + " --synthetic-users 120 --max-iters 2");
  REQUIRE(full.status == 0);
  CHECK(csv_rows(out + "/grid.csv").size() == 7);
}

TEST_CASE("config file values sit between flags and defaults") {
  Workspace ws("config");
  const auto out = ws.dir("out");
  const auto cfg = ws.dir("run.toml");
  {
    std::ofstream f(cfg);
    f << "bits = 6\nmax-iters = 3\nalpha = 0.07\n";
  }
  REQUIRE(run("prepare --out " + out + kSmall).status == 0);
  // The command line sets --bits 8; max-iters and alpha come from the file.
  const std::string flags =
      " --dataset synthetic --synthetic-users 120 --synthetic-items 60 --synthetic-bits 8"
      " --synthetic-ratings-per-user 15 --repeats 1 --interaction-dim 8 --bits 8";
  REQUIRE(run("train --config " + cfg + " --out " + out + flags).status == 0);
  const auto model = load_model(out + "/model-split0.bin");
  CHECK(model.bits() == 8);
  CHECK(model.hyper.alpha == 0.07);
  CHECK(model.hyper.max_iters == 3);
  CHECK(model.hyper.beta == 10.0);

  {
    std::ofstream f(cfg);
    f << "bits = 6\nnot-an-option = 1\n";
  }
  const auto bad = run("train --config " + cfg + " --out " + out + flags);
  CHECK(bad.status != 0);
  CHECK(bad.output.find("not-an-option") != std::string::npos);
}

TEST_CASE("errors exit nonzero with a message") {
  Workspace ws("errors");
  const auto out = ws.dir("out");
  auto r = run("prepare --dataset nosuch --out " + out);
  CHECK(r.status != 0);
  CHECK(r.output.find("error:") != std::string::npos);

  r = run("train --out " + out + kSmall);  // nothing prepared yet
  CHECK(r.status != 0);

  r = run("");
  CHECK(r.status != 0);

  r = run("prepare --bits 0 --out " + out + kSmall);
  CHECK(r.status != 0);

  REQUIRE(run("prepare --out " + out + kSmall).status == 0);
  r = run("grid --out " + out + kSmall, "MFDCF_WORKERS=lots");
  CHECK(r.status != 0);
  CHECK(r.output.find("MFDCF_WORKERS") != std::string::npos);
}

TEST_CASE("coldstart encodes JSON user records") {
  Workspace ws("coldstart");
  const auto out = ws.dir("out");
  REQUIRE(run("prepare --out " + out + kSmall).status == 0);
  REQUIRE(run("train --split 0 --out " + out + kSmall).status == 0);

  const auto cache = load_dataset(out + "/dataset.bin");
  nlohmann::json rec;
  for (std::size_t a = 0; a < cache.data.user_demo.attributes.size(); ++a)
    rec[cache.data.user_demo.attributes[a]] = cache.data.user_demo.values[0][a];
  nlohmann::json with_history = rec;
  with_history["history"] = {0, 3, 7};
  const auto records = ws.dir("users.json");
  {
    std::ofstream f(records);
    f << nlohmann::json::array({rec, with_history}).dump();
  }
  const auto r = run("coldstart --out " + out + kSmall + " --user-record " + records);
  REQUIRE(r.status == 0);
  const auto doc = nlohmann::json::parse(slurp(out + "/coldstart.json"));
  REQUIRE(doc["users"].size() == 2);
  for (const auto& u : doc["users"]) {
    const auto code = u["code"].get<std::string>();
    CHECK(code.size() == 8);
    CHECK(code.find_first_not_of("+-") == std::string::npos);
    CHECK(r.output.find(code) != std::string::npos);
    double sum = 0.0;
    for (double m : u["mu"]) sum += m;
    CHECK(sum == doctest::Approx(1.0));
  }

  {
    std::ofstream f(records);
    f << R"({"no-such-attribute": "x"})";
  }
  CHECK(run("coldstart --out " + out + kSmall + " --user-record " + records).status != 0);
  {
    std::ofstream f(records);
    f << "{not json";
  }
  CHECK(run("coldstart --out " + out + kSmall + " --user-record " + records).status != 0);
}
