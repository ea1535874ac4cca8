#include "mfdcf/coldstart.hpp"

#include "mfdcf/fusion.hpp"

#include <algorithm>

namespace mfdcf {

namespace {

constexpr double kResidualFloor = 1e-12;

void check_views(const TrainedModel& model, const std::vector<Mat>& X) {
  if (static_cast<Index>(X.size()) != model.views())
    throw ParameterError("cold start: expected " + std::to_string(model.views()) + " views, got " +
                         std::to_string(X.size()));
  for (std::size_t m = 0; m < X.size(); ++m) {
    if (X[m].rows() != model.W[m].cols())
      throw ParameterError("cold start: view " + std::to_string(m) + " has dimension " +
                           std::to_string(X[m].rows()) + ", model expects " + std::to_string(model.W[m].cols()));
    if (X[m].cols() != X.front().cols()) throw ParameterError("cold start: views disagree on the user count");
    if (!X[m].allFinite()) throw ParameterError("cold start: non-finite feature value");
  }
}

Vec fused(std::span<const Mat> P, Index u, const Vec& mu) {
  Vec out = Vec::Zero(P.front().rows());
  for (std::size_t m = 0; m < P.size(); ++m) out += inverse_weight(mu(static_cast<Index>(m))) * P[m].col(u);
  return out;
}

}  // namespace

Mat code_projection(const TrainedModel& model, Index view) {
  return model.R * model.W.at(static_cast<std::size_t>(view));
}

double coldstart_objective(const TrainedModel& model, std::span<const Mat> X, Index user, const Vec& b,
                           const Vec& mu) {
  double total = 0.0;
  for (std::size_t m = 0; m < X.size(); ++m)
    total += inverse_weight(mu(static_cast<Index>(m))) *
             (b - code_projection(model, static_cast<Index>(m)) * X[m].col(user)).squaredNorm();
  return total;
}

ColdStartBatch generate_user_codes(const TrainedModel& model, std::vector<Mat> X, const ColdStartOptions& options) {
  check_views(model, X);
  if (options.max_iters < 1) throw ParameterError("cold start: max_iters must be >= 1");

  const Index r = model.bits();
  const Index M = model.views();
  const Index n = X.front().cols();

  // Training ties codes to R·H and H to W_m·X_m, so R·W_m is the projection
  // from view m into code space.
  std::vector<Mat> P;  // R·W_m·X_m, r×n_u
  P.reserve(X.size());
  for (Index m = 0; m < M; ++m)
    P.push_back(code_projection(model, m) * X[static_cast<std::size_t>(m)]);

  ColdStartBatch batch;
  batch.B.resize(r, n);
  batch.mu.resize(M, n);
  batch.zero_projection.assign(static_cast<std::size_t>(n), false);

  for (Index u = 0; u < n; ++u) {
    Vec mu = Vec::Constant(M, 1.0 / static_cast<double>(M));
    Vec f = fused(P, u, mu);
    if ((f.array() == 0.0).all()) batch.zero_projection[static_cast<std::size_t>(u)] = true;
    Vec b = sign_codes(f);

    int it = 0;
    while (it < options.max_iters) {
      ++it;
      Vec h(M);
      for (Index m = 0; m < M; ++m) h(m) = std::max((b - P[static_cast<std::size_t>(m)].col(u)).norm(), kResidualFloor);
      mu = h / h.sum();
      Vec next = sign_codes(fused(P, u, mu));
      const bool unchanged = next == b;
      b = std::move(next);
      if (unchanged) break;
    }
    batch.iterations = std::max(batch.iterations, it);
    batch.B.col(u) = b;
    batch.mu.col(u) = mu;
  }
  batch.X = std::move(X);
  return batch;
}

std::vector<Mat> encode_user_views(const TrainedModel& model, const DemographicTable& users,
                                   const std::vector<std::vector<std::int32_t>>* histories) {
  const auto n = static_cast<Index>(users.values.size());
  if (histories && static_cast<Index>(histories->size()) != n)
    throw ParameterError("cold start: history count differs from the user count");

  std::vector<Mat> views;
  for (Index m = 0; m < model.views(); ++m) {
    const Index dim = model.W[static_cast<std::size_t>(m)].cols();
    Mat X = Mat::Zero(dim, n);
    switch (model.view_kinds[static_cast<std::size_t>(m)]) {
      case EncoderKind::OneHot: {
        if (!model.encoders.demographic) throw FormatError("cold start: model has no demographic encoder");
        const auto& enc = *model.encoders.demographic;
        for (Index u = 0; u < n; ++u) {
          std::map<std::string, std::string> record;
          for (std::size_t a = 0; a < users.attributes.size(); ++a)
            record[users.attributes[a]] = users.values[static_cast<std::size_t>(u)][a];
          X.col(u) = enc.encode_raw(record);
        }
        break;
      }
      case EncoderKind::BagOfWordsPca: {
        if (!model.encoders.interaction) throw FormatError("cold start: model has no interaction encoder");
        if (histories)
          for (Index u = 0; u < n; ++u) {
            const auto& hist = (*histories)[static_cast<std::size_t>(u)];
            if (!hist.empty()) X.col(u) = model.encoders.interaction->encode(hist);
          }
        break;
      }
      case EncoderKind::External:
        throw ParameterError("cold start: view " + std::to_string(m) +
                             " was supplied externally at training time and cannot be re-encoded");
    }
    if (X.rows() != dim) throw FormatError("cold start: encoder output does not match the projection width");
    normalize_columns(X);
    views.push_back(std::move(X));
  }
  return views;
}

ColdStartBatch encode_new_user(const TrainedModel& model, const std::map<std::string, std::string>& record,
                               const std::optional<std::vector<std::int32_t>>& history,
                               const ColdStartOptions& options) {
  if (record.empty()) throw ParameterError("cold start: empty user record");
  if (!model.encoders.demographic) throw FormatError("cold start: model has no demographic encoder");
  DemographicTable table;
  table.attributes = model.encoders.demographic->attributes();
  std::vector<std::string> row;
  for (const auto& attr : table.attributes) {
    auto it = record.find(attr);
    row.push_back(it == record.end() ? std::string{} : it->second);
  }
  for (const auto& [key, value] : record)
    if (std::find(table.attributes.begin(), table.attributes.end(), key) == table.attributes.end())
      throw ParameterError("cold start: unknown attribute '" + key + "'");
  table.values.push_back(std::move(row));

  std::vector<std::vector<std::int32_t>> histories;
  if (history) {
    for (auto item : *history)
      if (item < 0 || item >= model.items) throw ReferentialError("cold start: history item out of range");
    histories.push_back(*history);
  }
  return generate_user_codes(model, encode_user_views(model, table, history ? &histories : nullptr), options);
}

}  // namespace mfdcf
