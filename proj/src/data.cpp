#include "mfdcf/data.hpp"

#include "mfdcf/rng.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_set>

namespace mfdcf {

// ---------------------------------------------------------------------------
// RatingMatrix / Dataset

double RatingMatrix::density() const {
  if (rows == 0 || cols == 0) return 0.0;
  return static_cast<double>(entries.size()) /
         (static_cast<double>(rows) * static_cast<double>(cols));
}

SpMat RatingMatrix::to_sparse(bool symmetric) const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(entries.size());
  const double span = scale.max - scale.min;
  for (const auto& e : entries) {
    double v = e.value;
    if (symmetric) v = span > 0.0 ? 2.0 * (v - scale.min) / span - 1.0 : 0.0;
    trips.emplace_back(e.user, e.item, v);
  }
  SpMat S(rows, cols);
  S.setFromTriplets(trips.begin(), trips.end());
  return S;
}

void Dataset::validate() const {
  if (ratings.rows != num_users() || ratings.cols != num_items())
    throw ReferentialError("rating matrix shape does not match the id lists");
  for (const auto& e : ratings.entries) {
    if (e.user < 0 || e.user >= num_users() || e.item < 0 || e.item >= num_items())
      throw ReferentialError("rating refers to an unknown user or item index");
  }
  if (!user_demo.values.empty() && static_cast<Index>(user_demo.values.size()) != num_users())
    throw ReferentialError("demographic table has a different user count");
  for (const auto& row : user_demo.values) {
    if (row.size() != user_demo.attributes.size())
      throw ReferentialError("demographic record has the wrong attribute count");
  }
  if (!item_labels.empty() && static_cast<Index>(item_labels.size()) != num_items())
    throw ReferentialError("item label table has a different item count");
}

std::vector<std::vector<std::int32_t>> Dataset::user_histories() const {
  std::vector<std::vector<std::int32_t>> out(user_ids.size());
  for (const auto& e : ratings.entries) out[e.user].push_back(e.item);
  return out;
}

DatasetStats stats(const Dataset& d) {
  return {d.num_users(), d.num_items(), d.ratings.size(), d.ratings.sparsity()};
}

// ---------------------------------------------------------------------------
// Parsing helpers

namespace {

class LineReader {
 public:
  explicit LineReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw ParseError(path, 0, "cannot open file");
  }
  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++number_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  std::int64_t line() const { return number_; }
  const std::string& path() const { return path_; }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(path_, number_, msg); }

 private:
  std::string path_;
  std::ifstream in_;
  std::int64_t number_ = 0;
};

std::vector<std::string> split_double_colon(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find("::", start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 2;
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (char& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

struct DedupTable {
  std::unordered_map<std::uint64_t, std::size_t> where;
  std::vector<Rating> entries;

  // Keeps the last occurrence of a (user, item) pair at its first position.
  void add(const Rating& r) {
    const std::uint64_t key = (static_cast<std::uint64_t>(r.user) << 32) |
                              static_cast<std::uint32_t>(r.item);
    auto [it, fresh] = where.try_emplace(key, entries.size());
    if (fresh)
      entries.push_back(r);
    else
      entries[it->second] = r;
  }
};

void add_unique(std::vector<std::string>& labels, std::string label) {
  if (std::find(labels.begin(), labels.end(), label) == labels.end())
    labels.push_back(std::move(label));
}

}  // namespace

std::vector<std::string> word_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    const bool numeric = std::all_of(cur.begin(), cur.end(), [](char c) { return c >= '0' && c <= '9'; });
    if (cur.size() >= 2 && !numeric) out.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))
      cur.push_back(c);
    else if (c >= 'A' && c <= 'Z')
      cur.push_back(static_cast<char>(c - 'A' + 'a'));
    else
      flush();
  }
  flush();
  return out;
}

std::vector<std::string> split_bx_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t i = 0;
  const std::size_t n = line.size();
  while (i <= n) {
    std::string field;
    if (i < n && line[i] == '"') {
      ++i;
      // A quote closes the field only when followed by ';' or end of line;
      // the dump contains unescaped quotes inside titles.
      while (i < n) {
        const char c = line[i];
        if (c == '\\' && i + 1 < n && line[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else if (c == '"' && i + 1 < n && line[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else if (c == '"' && (i + 1 == n || line[i + 1] == ';')) {
          ++i;
          break;
        } else {
          field.push_back(c);
          ++i;
        }
      }
    } else {
      while (i < n && line[i] != ';') field.push_back(line[i++]);
      if (field == "NULL") field.clear();
    }
    fields.push_back(std::move(field));
    if (i >= n) break;
    ++i;  // ';'
    if (i == n) {
      fields.emplace_back();
      break;
    }
  }
  return fields;
}

std::string bx_age_bucket(const std::string& raw) {
  double age = 0.0;
  if (!parse_number(raw, age)) return {};
  if (age < 0.0 || age > 100.0) return {};
  const int decade = std::min(9, static_cast<int>(age) / 10) * 10;
  return decade == 90 ? std::string("90+") : std::to_string(decade) + "-" + std::to_string(decade + 9);
}

std::string bx_country(const std::string& location) {
  const auto pos = location.rfind(',');
  std::string token = lower(trim(pos == std::string::npos ? location : location.substr(pos + 1)));
  while (!token.empty() && (token.back() == '.' || token.back() == '"')) token.pop_back();
  token = trim(token);
  if (token == "n/a" || token == "na") return {};
  return token;
}

// ---------------------------------------------------------------------------
// MovieLens-1M

Dataset load_movielens(const std::string& ratings_path, const std::string& users_path,
                       const std::string& movies_path) {
  Dataset d;
  d.name = "movielens";
  d.ratings.scale = {1.0, 5.0};
  d.user_demo.attributes = {"gender", "age", "occupation"};

  struct UserRow {
    long id;
    std::vector<std::string> demo;
  };
  std::vector<UserRow> users;
  {
    LineReader in(users_path);
    std::string line;
    std::unordered_set<long> seen;
    while (in.next(line)) {
      if (line.empty()) continue;
      auto f = split_double_colon(line);
      if (f.size() < 4) in.fail("expected UserID::Gender::Age::Occupation::Zip-code");
      long id = 0;
      if (!parse_number(f[0], id)) in.fail("bad user id '" + f[0] + "'");
      if (!seen.insert(id).second) in.fail("duplicate user id " + f[0]);
      users.push_back({id, {trim(f[1]), trim(f[2]), trim(f[3])}});
    }
  }
  std::sort(users.begin(), users.end(), [](const UserRow& a, const UserRow& b) { return a.id < b.id; });
  std::unordered_map<long, std::int32_t> user_index;
  for (const auto& u : users) {
    user_index.emplace(u.id, static_cast<std::int32_t>(d.user_ids.size()));
    d.user_ids.push_back(std::to_string(u.id));
    d.user_demo.values.push_back(u.demo);
  }

  // Items span MovieID 1..max; ids absent from movies.dat become label-less
  // items, which is what the published item count assumes.
  std::unordered_map<long, std::vector<std::string>> movie_labels;
  long max_movie = 0;
  {
    LineReader in(movies_path);
    std::string line;
    while (in.next(line)) {
      if (line.empty()) continue;
      auto f = split_double_colon(line);
      if (f.size() < 3) in.fail("expected MovieID::Title::Genres");
      long id = 0;
      if (!parse_number(f[0], id) || id < 1) in.fail("bad movie id '" + f[0] + "'");
      std::vector<std::string> labels;
      std::size_t start = 0;
      const std::string& genres = f[2];
      while (start <= genres.size()) {
        const auto bar = genres.find('|', start);
        const std::string g = trim(genres.substr(start, bar == std::string::npos ? std::string::npos : bar - start));
        if (!g.empty()) add_unique(labels, "genre:" + g);
        if (bar == std::string::npos) break;
        start = bar + 1;
      }
      for (auto& w : word_tokens(f[1])) add_unique(labels, "title:" + w);
      if (!movie_labels.emplace(id, std::move(labels)).second) in.fail("duplicate movie id " + f[0]);
      max_movie = std::max(max_movie, id);
    }
  }
  d.item_labels.resize(static_cast<std::size_t>(max_movie));
  for (long id = 1; id <= max_movie; ++id) {
    d.item_ids.push_back(std::to_string(id));
    auto it = movie_labels.find(id);
    if (it != movie_labels.end()) d.item_labels[static_cast<std::size_t>(id - 1)] = it->second;
  }

  DedupTable table;
  {
    LineReader in(ratings_path);
    std::string line;
    while (in.next(line)) {
      if (line.empty()) continue;
      auto f = split_double_colon(line);
      if (f.size() != 4) in.fail("expected UserID::MovieID::Rating::Timestamp");
      long uid = 0, mid = 0;
      double value = 0.0;
      if (!parse_number(f[0], uid) || !parse_number(f[1], mid)) in.fail("bad id field");
      if (!parse_number(f[2], value) || value < 1.0 || value > 5.0) in.fail("bad rating '" + f[2] + "'");
      auto u = user_index.find(uid);
      if (u == user_index.end())
        throw ReferentialError(ratings_path + ":" + std::to_string(in.line()) + ": unknown user " + f[0]);
      if (!movie_labels.count(mid))
        throw ReferentialError(ratings_path + ":" + std::to_string(in.line()) + ": unknown movie " + f[1]);
      table.add({u->second, static_cast<std::int32_t>(mid - 1), value, false});
    }
    if (table.entries.empty()) throw ParseError(ratings_path, in.line(), "no ratings");
  }
  d.ratings.rows = d.num_users();
  d.ratings.cols = d.num_items();
  d.ratings.entries = std::move(table.entries);
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------
// BookCrossing

Dataset filter_min_counts(const Dataset& d, int min_user, int min_item) {
  std::vector<Rating> current = d.ratings.entries;
  while (true) {
    std::vector<int> per_user(d.user_ids.size(), 0), per_item(d.item_ids.size(), 0);
    for (const auto& e : current) {
      ++per_user[e.user];
      ++per_item[e.item];
    }
    std::vector<Rating> kept;
    kept.reserve(current.size());
    for (const auto& e : current)
      if (per_user[e.user] >= min_user && per_item[e.item] >= min_item) kept.push_back(e);
    const bool stable = kept.size() == current.size();
    current = std::move(kept);
    if (stable) break;
  }

  std::vector<std::int32_t> user_map(d.user_ids.size(), -1), item_map(d.item_ids.size(), -1);
  for (const auto& e : current) {
    user_map[e.user] = 0;
    item_map[e.item] = 0;
  }
  Dataset out;
  out.name = d.name;
  out.ratings.scale = d.ratings.scale;
  out.user_demo.attributes = d.user_demo.attributes;
  for (std::size_t u = 0; u < user_map.size(); ++u) {
    if (user_map[u] < 0) continue;
    user_map[u] = static_cast<std::int32_t>(out.user_ids.size());
    out.user_ids.push_back(d.user_ids[u]);
    if (!d.user_demo.values.empty()) out.user_demo.values.push_back(d.user_demo.values[u]);
  }
  for (std::size_t i = 0; i < item_map.size(); ++i) {
    if (item_map[i] < 0) continue;
    item_map[i] = static_cast<std::int32_t>(out.item_ids.size());
    out.item_ids.push_back(d.item_ids[i]);
    if (!d.item_labels.empty()) out.item_labels.push_back(d.item_labels[i]);
  }
  out.ratings.rows = out.num_users();
  out.ratings.cols = out.num_items();
  out.ratings.entries.reserve(current.size());
  for (const auto& e : current) out.ratings.entries.push_back({user_map[e.user], item_map[e.item], e.value, e.implicit});
  return out;
}

Dataset load_bookcrossing(const std::string& ratings_path, const std::string& users_path,
                          const std::string& books_path, const BookCrossingOptions& opts) {
  std::unordered_map<std::string, std::vector<std::string>> user_demo;
  {
    LineReader in(users_path);
    std::string line;
    while (in.next(line)) {
      if (line.empty()) continue;
      auto f = split_bx_line(line);
      if (in.line() == 1 && !f.empty() && f[0] == "User-ID") continue;
      if (f.size() < 2) in.fail("expected \"User-ID\";\"Location\";\"Age\"");
      const std::string id = trim(f[0]);
      if (id.empty()) in.fail("empty user id");
      user_demo[id] = {bx_country(f[1]), f.size() > 2 ? bx_age_bucket(f[2]) : std::string()};
    }
  }

  std::unordered_map<std::string, std::vector<std::string>> book_labels;
  {
    LineReader in(books_path);
    std::string line;
    while (in.next(line)) {
      if (line.empty()) continue;
      auto f = split_bx_line(line);
      if (in.line() == 1 && !f.empty() && f[0] == "ISBN") continue;
      if (f.size() < 5) in.fail("expected ISBN;Title;Author;Year;Publisher");
      std::vector<std::string> labels;
      for (auto& w : word_tokens(f[1])) add_unique(labels, "title:" + w);
      const std::string author = lower(trim(f[2]));
      if (!author.empty()) add_unique(labels, "author:" + author);
      const std::string publisher = lower(trim(f[4]));
      if (!publisher.empty()) add_unique(labels, "publisher:" + publisher);
      std::string isbn = trim(f[0]);
      for (char& c : isbn) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      book_labels[isbn] = std::move(labels);
    }
  }

  Dataset full;
  full.name = "bookcrossing";
  full.ratings.scale = {1.0, 10.0};
  full.user_demo.attributes = {"country", "age"};
  std::unordered_map<std::string, std::int32_t> uidx, iidx;
  DedupTable table;
  {
    LineReader in(ratings_path);
    std::string line;
    while (in.next(line)) {
      if (line.empty()) continue;
      auto f = split_bx_line(line);
      if (in.line() == 1 && !f.empty() && f[0] == "User-ID") continue;
      if (f.size() != 3) in.fail("expected \"User-ID\";\"ISBN\";\"Book-Rating\"");
      const std::string uid = trim(f[0]);
      std::string isbn = trim(f[1]);
      for (char& c : isbn) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      int value = 0;
      if (!parse_number(f[2], value) || value < 0 || value > 10) in.fail("bad rating '" + f[2] + "'");
      auto demo = user_demo.find(uid);
      if (demo == user_demo.end())
        throw ReferentialError(ratings_path + ":" + std::to_string(in.line()) + ": unknown user " + uid);
      auto book = book_labels.find(isbn);
      if (book == book_labels.end() && opts.require_book_metadata) continue;

      auto [u, new_user] = uidx.try_emplace(uid, static_cast<std::int32_t>(full.user_ids.size()));
      if (new_user) {
        full.user_ids.push_back(uid);
        full.user_demo.values.push_back(demo->second);
      }
      auto [i, new_item] = iidx.try_emplace(isbn, static_cast<std::int32_t>(full.item_ids.size()));
      if (new_item) {
        full.item_ids.push_back(isbn);
        full.item_labels.push_back(book == book_labels.end() ? std::vector<std::string>{} : book->second);
      }
      // Implicit feedback keeps its interaction at the scale midpoint.
      const bool implicit = value == 0;
      table.add({u->second, i->second, implicit ? full.ratings.scale.midpoint() : double(value), implicit});
    }
    if (table.entries.empty()) throw ParseError(ratings_path, in.line(), "no ratings");
  }
  full.ratings.rows = full.num_users();
  full.ratings.cols = full.num_items();
  full.ratings.entries = std::move(table.entries);
  Dataset out = filter_min_counts(full, opts.min_user_ratings, opts.min_item_ratings);
  if (out.ratings.entries.empty()) throw ParameterError("bookcrossing: filtering removed every rating");
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Encoders

void normalize_columns(Mat& X) {
  for (Index j = 0; j < X.cols(); ++j) {
    const double norm = X.col(j).norm();
    if (norm > 0.0) X.col(j) /= norm;
  }
}

DemographicEncoder DemographicEncoder::fit(const DemographicTable& table, int min_count) {
  DemographicEncoder enc;
  enc.attributes_ = table.attributes;
  enc.categories_.resize(table.attributes.size());
  std::vector<std::vector<std::string>> rare(table.attributes.size());
  for (std::size_t a = 0; a < table.attributes.size(); ++a) {
    std::map<std::string, int> counts;
    for (const auto& row : table.values)
      if (!row[a].empty()) ++counts[row[a]];
    for (const auto& [value, count] : counts) {
      if (count >= min_count)
        enc.categories_[a].push_back(value);
      else
        rare[a].push_back(value);
    }
    if (!rare[a].empty()) enc.categories_[a].push_back("<other>");
  }
  enc.rebuild_index();
  for (std::size_t a = 0; a < rare.size(); ++a) {
    const Index other = static_cast<Index>(enc.categories_[a].size()) - 1;
    for (const auto& value : rare[a]) enc.lookup_[a].emplace(value, other);
  }
  enc.aliases_ = std::move(rare);
  return enc;
}

DemographicEncoder DemographicEncoder::from_parts(std::vector<std::string> attributes,
                                                  std::vector<std::vector<std::string>> categories,
                                                  std::vector<std::vector<std::string>> aliases) {
  DemographicEncoder enc;
  enc.attributes_ = std::move(attributes);
  enc.categories_ = std::move(categories);
  enc.aliases_ = std::move(aliases);
  enc.aliases_.resize(enc.attributes_.size());
  if (enc.categories_.size() != enc.attributes_.size())
    throw FormatError("demographic encoder: attribute/category count mismatch");
  enc.rebuild_index();
  for (std::size_t a = 0; a < enc.aliases_.size(); ++a) {
    if (enc.aliases_[a].empty()) continue;
    if (enc.categories_[a].empty() || enc.categories_[a].back() != "<other>")
      throw FormatError("demographic encoder: aliases without an <other> slot");
    const Index other = static_cast<Index>(enc.categories_[a].size()) - 1;
    for (const auto& value : enc.aliases_[a]) enc.lookup_[a].emplace(value, other);
  }
  return enc;
}

void DemographicEncoder::rebuild_index() {
  lookup_.assign(attributes_.size(), {});
  offsets_.assign(attributes_.size(), 0);
  dim_ = 0;
  for (std::size_t a = 0; a < attributes_.size(); ++a) {
    offsets_[a] = dim_;
    for (std::size_t c = 0; c < categories_[a].size(); ++c) {
      if (categories_[a][c] == "<other>" && c + 1 == categories_[a].size()) continue;
      lookup_[a].emplace(categories_[a][c], static_cast<Index>(c));
    }
    dim_ += static_cast<Index>(categories_[a].size());
  }
}

Vec DemographicEncoder::encode_raw(const std::vector<std::string>& record) const {
  if (record.size() != attributes_.size())
    throw ParameterError("demographic record has " + std::to_string(record.size()) +
                         " attributes, encoder expects " + std::to_string(attributes_.size()));
  Vec out = Vec::Zero(dim_);
  for (std::size_t a = 0; a < attributes_.size(); ++a) {
    if (record[a].empty()) continue;
    auto it = lookup_[a].find(record[a]);
    if (it != lookup_[a].end()) out(offsets_[a] + it->second) = 1.0;
  }
  return out;
}

Vec DemographicEncoder::encode_raw(const std::map<std::string, std::string>& record) const {
  std::vector<std::string> row(attributes_.size());
  for (std::size_t a = 0; a < attributes_.size(); ++a) {
    auto it = record.find(attributes_[a]);
    if (it != record.end()) row[a] = it->second;
  }
  return encode_raw(row);
}

Mat DemographicEncoder::encode_table(const DemographicTable& table) const {
  Mat X(dim_, static_cast<Index>(table.values.size()));
  for (std::size_t u = 0; u < table.values.size(); ++u) X.col(static_cast<Index>(u)) = encode_raw(table.values[u]);
  return X;
}

InteractionEncoder InteractionEncoder::fit_vocabulary(const Dataset& d, int min_label_items) {
  std::map<std::string, int> counts;
  for (const auto& labels : d.item_labels) {
    std::set<std::string> unique(labels.begin(), labels.end());
    for (const auto& l : unique) ++counts[l];
  }
  InteractionEncoder enc;
  std::unordered_map<std::string, std::int32_t> index;
  for (const auto& [label, count] : counts) {
    if (count < min_label_items) continue;
    index.emplace(label, static_cast<std::int32_t>(enc.vocab_.size()));
    enc.vocab_.push_back(label);
  }
  enc.item_tokens_.resize(d.item_ids.size());
  for (std::size_t i = 0; i < d.item_labels.size(); ++i) {
    std::set<std::int32_t> unique;
    for (const auto& l : d.item_labels[i]) {
      auto it = index.find(l);
      if (it != index.end()) unique.insert(it->second);
    }
    enc.item_tokens_[i].assign(unique.begin(), unique.end());
  }
  return enc;
}

InteractionEncoder InteractionEncoder::from_parts(std::vector<std::string> vocab,
                                                  std::vector<std::vector<std::int32_t>> item_tokens,
                                                  PcaBasis<double> pca) {
  InteractionEncoder enc;
  enc.vocab_ = std::move(vocab);
  enc.item_tokens_ = std::move(item_tokens);
  enc.pca_ = std::move(pca);
  return enc;
}

SpMat InteractionEncoder::bag_of_words(const std::vector<std::vector<std::int32_t>>& histories) const {
  // Counts are summed per user before they reach the triplet list, which
  // therefore holds one entry per distinct (token, user) pair.
  std::vector<double> counts(static_cast<std::size_t>(vocab_size()), 0.0);
  std::vector<std::int32_t> touched;
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t u = 0; u < histories.size(); ++u) {
    for (std::int32_t item : histories[u]) {
      if (item < 0 || static_cast<std::size_t>(item) >= item_tokens_.size())
        throw ReferentialError("history refers to unknown item index " + std::to_string(item));
      for (std::int32_t t : item_tokens_[static_cast<std::size_t>(item)]) {
        if (counts[static_cast<std::size_t>(t)] == 0.0) touched.push_back(t);
        counts[static_cast<std::size_t>(t)] += 1.0;
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::int32_t t : touched) {
      trips.emplace_back(t, static_cast<Index>(u), counts[static_cast<std::size_t>(t)]);
      counts[static_cast<std::size_t>(t)] = 0.0;
    }
    touched.clear();
  }
  SpMat X(vocab_size(), static_cast<Index>(histories.size()));
  X.setFromTriplets(trips.begin(), trips.end());
  return X;
}

PcaResult<double> InteractionEncoder::fit_pca(const std::vector<std::vector<std::int32_t>>& histories,
                                              Index target_dim) {
  if (vocab_.empty()) throw ParameterError("interaction encoder: empty label vocabulary");
  auto result = pca_reduce(bag_of_words(histories), target_dim);
  pca_ = result.basis;
  return result;
}

Vec InteractionEncoder::encode(const std::vector<std::int32_t>& history) const {
  if (pca_.input_dim() != vocab_size()) throw ParameterError("interaction encoder: PCA basis not fitted");
  SpMat x = bag_of_words({history});
  return pca_.project(Mat(x)).col(0);
}

FeatureBlock encode_demographics(const Dataset& d, const DemographicEncoder& enc, int view_index) {
  FeatureBlock block;
  block.view_index = view_index;
  block.encoder = EncoderKind::OneHot;
  block.data = enc.encode_table(d.user_demo);
  if (block.data.cols() != d.num_users())
    throw ReferentialError("demographic table does not cover every user");
  normalize_columns(block.data);
  return block;
}

FeatureBlock encode_demographics(const Dataset& d, int min_count) {
  return encode_demographics(d, DemographicEncoder::fit(d.user_demo, min_count));
}

FeatureBlock encode_interaction_preference(const Dataset& d, Index target_dim, InteractionEncoder& enc,
                                           int view_index) {
  auto result = enc.fit_pca(d.user_histories(), target_dim);
  FeatureBlock block;
  block.view_index = view_index;
  block.encoder = EncoderKind::BagOfWordsPca;
  block.data = std::move(result.scores);
  normalize_columns(block.data);
  return block;
}

FeatureBlock encode_interaction_preference(const Dataset& d, Index target_dim) {
  auto enc = InteractionEncoder::fit_vocabulary(d);
  return encode_interaction_preference(d, target_dim, enc);
}

// ---------------------------------------------------------------------------
// Splits

void SplitSpec::validate(Index users) const {
  if (!(cold_fraction > 0.0 && cold_fraction < 1.0))
    throw ParameterError("split: cold_fraction must lie in (0, 1)");
  if (repeats < 1) throw ParameterError("split: repeats must be positive");
  const auto test = static_cast<Index>(std::llround(cold_fraction * static_cast<double>(users)));
  if (test < 1) throw ParameterError("split: cold_fraction selects no test user");
  if (test >= users) throw ParameterError("split: cold_fraction leaves the training set empty");
}

Dataset select_users(const Dataset& d, const std::vector<Index>& users) {
  Dataset out;
  out.name = d.name;
  out.item_ids = d.item_ids;
  out.item_labels = d.item_labels;
  out.user_demo.attributes = d.user_demo.attributes;
  out.ratings.scale = d.ratings.scale;
  std::vector<std::int32_t> remap(d.user_ids.size(), -1);
  for (Index u : users) {
    remap[static_cast<std::size_t>(u)] = static_cast<std::int32_t>(out.user_ids.size());
    out.user_ids.push_back(d.user_ids[static_cast<std::size_t>(u)]);
    if (!d.user_demo.values.empty()) out.user_demo.values.push_back(d.user_demo.values[static_cast<std::size_t>(u)]);
  }
  for (const auto& e : d.ratings.entries) {
    if (remap[e.user] >= 0) out.ratings.entries.push_back({remap[e.user], e.item, e.value, e.implicit});
  }
  out.ratings.rows = out.num_users();
  out.ratings.cols = out.num_items();
  return out;
}

ColdStartSplit split_cold_start(const Dataset& d, const SplitSpec& spec, int repeat) {
  const Index n = d.num_users();
  spec.validate(n);
  const auto test_count = static_cast<Index>(std::llround(spec.cold_fraction * static_cast<double>(n)));

  RngStream rng(spec.seed + static_cast<std::uint64_t>(repeat), "split");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  for (Index i = 0; i < test_count; ++i) {
    const auto span = static_cast<std::uint64_t>(n - i);
    const Index j = i + static_cast<Index>(rng.engine()() % span);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  ColdStartSplit split;
  split.test_users.assign(order.begin(), order.begin() + test_count);
  std::sort(split.test_users.begin(), split.test_users.end());
  std::vector<char> is_test(static_cast<std::size_t>(n), 0);
  for (Index u : split.test_users) is_test[static_cast<std::size_t>(u)] = 1;
  for (Index u = 0; u < n; ++u)
    if (!is_test[static_cast<std::size_t>(u)]) split.train_users.push_back(u);
  split.train = select_users(d, split.train_users);
  split.test = select_users(d, split.test_users);
  return split;
}

}  // namespace mfdcf
