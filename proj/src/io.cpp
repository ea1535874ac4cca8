#include "mfdcf/io.hpp"

#include "mfdcf/codes.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unistd.h>

namespace mfdcf {

namespace {

constexpr char kDatasetMagic[8] = {'M', 'F', 'D', 'C', 'F', 'D', 'S', '\0'};
constexpr char kModelMagic[8] = {'M', 'F', 'D', 'C', 'F', 'M', 'D', '\0'};

class ByteWriter {
 public:
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void strings(const std::vector<std::string>& v) {
    u64(v.size());
    for (const auto& s : v) str(s);
  }
  void ints(const std::vector<std::int32_t>& v) {
    u64(v.size());
    for (auto x : v) u32(static_cast<std::uint32_t>(x));
  }
  void matrix(const Mat& M) {
    i64(M.rows());
    i64(M.cols());
    // Column-major, matching Eigen's storage.
    for (Index j = 0; j < M.cols(); ++j)
      for (Index i = 0; i < M.rows(); ++i) f64(M(i, j));
  }
  void vector(const Vec& v) {
    i64(v.size());
    for (Index i = 0; i < v.size(); ++i) f64(v(i));
  }
  void codes(const Mat& signs) {
    const PackedCodes packed = PackedCodes::from_signs(signs);
    i64(packed.bits());
    i64(packed.size());
    for (auto w : packed.words()) u64(w);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("truncated file at byte " + std::to_string(pos_));
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<std::uint8_t>(bytes_[pos_++])} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<std::uint8_t>(bytes_[pos_++])} << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::size_t count(std::size_t element_size) {
    const std::uint64_t n = u64();
    if (element_size > 0 && n > (bytes_.size() - pos_) / element_size)
      throw FormatError("length field exceeds the remaining file size");
    return static_cast<std::size_t>(n);
  }
  Index dim() {
    const std::int64_t v = i64();
    if (v < 0 || v > (std::int64_t{1} << 40)) throw FormatError("invalid dimension " + std::to_string(v));
    return static_cast<Index>(v);
  }
  std::string str() {
    const std::size_t n = count(1);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<std::string> strings() {
    std::vector<std::string> v(count(8));
    for (auto& s : v) s = str();
    return v;
  }
  std::vector<std::int32_t> ints() {
    std::vector<std::int32_t> v(count(4));
    for (auto& x : v) x = static_cast<std::int32_t>(u32());
    return v;
  }
  Mat matrix() {
    const Index rows = dim();
    const Index cols = dim();
    need(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 8);
    Mat M(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) M(i, j) = f64();
    return M;
  }
  Vec vector() {
    const Index n = dim();
    need(static_cast<std::size_t>(n) * 8);
    Vec v(n);
    for (Index i = 0; i < n; ++i) v(i) = f64();
    return v;
  }
  Mat codes() {
    const Index bits = dim();
    const Index count = dim();
    PackedCodes packed(bits, count);
    need(packed.words().size() * 8);
    for (Index j = 0; j < count; ++j)
      for (auto& w : packed.code(j)) w = u64();
    return packed.to_signs();
  }
  void magic(const char (&expected)[8], const char* what) {
    need(8);
    if (bytes_.compare(pos_, 8, expected, 8) != 0) throw FormatError(std::string("not a ") + what + " file");
    pos_ += 8;
  }
  void finish() const {
    if (pos_ != bytes_.size()) throw FormatError("trailing bytes after the last record");
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void write_dataset_body(ByteWriter& w, const Dataset& d) {
  w.str(d.name);
  w.strings(d.user_ids);
  w.strings(d.item_ids);
  w.i64(d.ratings.rows);
  w.i64(d.ratings.cols);
  w.f64(d.ratings.scale.min);
  w.f64(d.ratings.scale.max);
  w.u64(d.ratings.entries.size());
  for (const auto& r : d.ratings.entries) {
    w.u32(static_cast<std::uint32_t>(r.user));
    w.u32(static_cast<std::uint32_t>(r.item));
    w.f64(r.value);
    w.u8(r.implicit ? 1 : 0);
  }
  w.strings(d.user_demo.attributes);
  w.u64(d.user_demo.values.size());
  for (const auto& row : d.user_demo.values) w.strings(row);
  w.u64(d.item_labels.size());
  for (const auto& labels : d.item_labels) w.strings(labels);
}

Dataset read_dataset_body(ByteReader& r) {
  Dataset d;
  d.name = r.str();
  d.user_ids = r.strings();
  d.item_ids = r.strings();
  d.ratings.rows = r.dim();
  d.ratings.cols = r.dim();
  d.ratings.scale.min = r.f64();
  d.ratings.scale.max = r.f64();
  d.ratings.entries.resize(r.count(17));
  for (auto& e : d.ratings.entries) {
    e.user = static_cast<std::int32_t>(r.u32());
    e.item = static_cast<std::int32_t>(r.u32());
    e.value = r.f64();
    e.implicit = r.u8() != 0;
  }
  d.user_demo.attributes = r.strings();
  d.user_demo.values.resize(r.count(8));
  for (auto& row : d.user_demo.values) row = r.strings();
  d.item_labels.resize(r.count(8));
  for (auto& labels : d.item_labels) labels = r.strings();
  return d;
}

void write_hyper(ByteWriter& w, const Hyperparams& h) {
  w.f64(h.alpha);
  w.f64(h.beta);
  w.f64(h.gamma);
  w.f64(h.lambda);
  w.i64(h.bits);
  w.i64(h.rank_budget);
  w.i64(h.svd_rank);
  w.i64(h.max_iters);
  w.f64(h.tol);
  w.u64(h.seed);
  w.f64(h.ridge);
  w.u8(h.symmetric_ratings ? 1 : 0);
}

Hyperparams read_hyper(ByteReader& r) {
  Hyperparams h;
  h.alpha = r.f64();
  h.beta = r.f64();
  h.gamma = r.f64();
  h.lambda = r.f64();
  h.bits = r.i64();
  h.rank_budget = r.i64();
  h.svd_rank = r.i64();
  h.max_iters = static_cast<int>(r.i64());
  h.tol = r.f64();
  h.seed = r.u64();
  h.ridge = r.f64();
  h.symmetric_ratings = r.u8() != 0;
  return h;
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write to " + tmp.string() + " failed");
    }
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string serialize_dataset(const DatasetCache& cache) {
  ByteWriter w;
  w.raw(kDatasetMagic, 8);
  w.u32(kDatasetCacheVersion);
  w.str(cache.fingerprint);
  write_dataset_body(w, cache.data);
  return w.take();
}

DatasetCache deserialize_dataset(const std::string& bytes) {
  ByteReader r(bytes);
  r.magic(kDatasetMagic, "dataset cache");
  const auto version = r.u32();
  if (version != kDatasetCacheVersion)
    throw FormatError("dataset cache version " + std::to_string(version) + " is not supported");
  DatasetCache cache;
  cache.fingerprint = r.str();
  cache.data = read_dataset_body(r);
  r.finish();
  try {
    cache.data.validate();
  } catch (const ReferentialError& e) {
    throw FormatError(std::string("dataset cache is inconsistent: ") + e.what());
  }
  return cache;
}

void save_dataset(const std::string& path, const DatasetCache& cache) {
  write_file_atomic(path, serialize_dataset(cache));
}

DatasetCache load_dataset(const std::string& path) { return deserialize_dataset(read_file(path)); }

std::string serialize_model(const TrainedModel& model) {
  model.validate();
  ByteWriter w;
  w.raw(kModelMagic, 8);
  w.u32(kModelFormatVersion);
  w.str(model.dataset);
  w.i64(model.users);
  w.i64(model.items);
  w.i64(model.iterations);
  write_hyper(w, model.hyper);

  w.u64(model.W.size());
  for (std::size_t m = 0; m < model.W.size(); ++m) {
    w.u8(static_cast<std::uint8_t>(model.view_kinds[m]));
    w.matrix(model.W[m]);
  }
  w.vector(model.mu);
  w.matrix(model.R);
  w.codes(model.D);
  w.codes(model.B);

  w.u8(model.encoders.demographic ? 1 : 0);
  if (const auto& enc = model.encoders.demographic) {
    w.strings(enc->attributes());
    w.u64(enc->categories().size());
    for (const auto& c : enc->categories()) w.strings(c);
    w.u64(enc->aliases().size());
    for (const auto& a : enc->aliases()) w.strings(a);
  }
  w.u8(model.encoders.interaction ? 1 : 0);
  if (const auto& enc = model.encoders.interaction) {
    w.strings(enc->vocabulary());
    w.u64(enc->item_tokens().size());
    for (const auto& t : enc->item_tokens()) w.ints(t);
    w.vector(enc->pca().mean);
    w.matrix(enc->pca().components);
  }
  return w.take();
}

TrainedModel deserialize_model(const std::string& bytes) {
  ByteReader r(bytes);
  r.magic(kModelMagic, "model");
  const auto version = r.u32();
  if (version != kModelFormatVersion)
    throw FormatError("model format version " + std::to_string(version) + " is not supported");

  TrainedModel model;
  model.dataset = r.str();
  model.users = r.dim();
  model.items = r.dim();
  model.iterations = static_cast<int>(r.i64());
  model.hyper = read_hyper(r);

  const std::size_t views = r.count(1);
  for (std::size_t m = 0; m < views; ++m) {
    const auto kind = r.u8();
    if (kind > static_cast<std::uint8_t>(EncoderKind::External)) throw FormatError("unknown view encoder tag");
    model.view_kinds.push_back(static_cast<EncoderKind>(kind));
    model.W.push_back(r.matrix());
  }
  model.mu = r.vector();
  model.R = r.matrix();
  model.D = r.codes();
  model.B = r.codes();

  if (r.u8()) {
    auto attributes = r.strings();
    std::vector<std::vector<std::string>> categories(r.count(8));
    for (auto& c : categories) c = r.strings();
    std::vector<std::vector<std::string>> aliases(r.count(8));
    for (auto& a : aliases) a = r.strings();
    model.encoders.demographic =
        DemographicEncoder::from_parts(std::move(attributes), std::move(categories), std::move(aliases));
  }
  if (r.u8()) {
    auto vocab = r.strings();
    std::vector<std::vector<std::int32_t>> tokens(r.count(8));
    for (auto& t : tokens) t = r.ints();
    PcaBasis<double> pca;
    pca.mean = r.vector();
    pca.components = r.matrix();
    model.encoders.interaction = InteractionEncoder::from_parts(std::move(vocab), std::move(tokens), std::move(pca));
  }
  r.finish();
  model.validate();
  return model;
}

void save_model(const std::string& path, const TrainedModel& model) {
  write_file_atomic(path, serialize_model(model));
}

TrainedModel load_model(const std::string& path) { return deserialize_model(read_file(path)); }

std::string fingerprint_files(const std::vector<std::string>& paths) {
  std::ostringstream out;
  for (const auto& path : paths) {
    const std::string bytes = read_file(path);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 1099511628211ull;
    }
    out << std::filesystem::path(path).filename().string() << ':' << bytes.size() << ':' << std::hex
        << std::setw(16) << std::setfill('0') << h << std::dec << ';';
  }
  return out.str();
}

}  // namespace mfdcf
