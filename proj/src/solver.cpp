#include "mfdcf/solver.hpp"

#include "mfdcf/rng.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>

namespace mfdcf {

void Hyperparams::validate() const {
  if (bits < 1) throw ParameterError("hyperparameters: code length must be >= 1");
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0))
    throw ParameterError("hyperparameters: alpha, beta and gamma must be >= 0");
  if (!(lambda > 0.0)) throw ParameterError("hyperparameters: lambda must be > 0");
  if (!(tol > 0.0)) throw ParameterError("hyperparameters: tol must be > 0");
  if (max_iters < 1) throw ParameterError("hyperparameters: max_iters must be >= 1");
  if (svd_rank == 0) throw ParameterError("hyperparameters: svd rank must be >= 1");
  const Index k = resolved_rank_budget();
  if (k < 0 || k > bits) throw ParameterError("hyperparameters: rank budget outside [0, r]");
  if (!(ridge >= 0.0)) throw ParameterError("hyperparameters: ridge must be >= 0");
}

void TrainedModel::validate() const {
  const Index r = D.rows();
  if (R.rows() != r || R.cols() != r) throw FormatError("model: rotation shape");
  if (D.cols() != items) throw FormatError("model: item code count");
  if (B.rows() != r || B.cols() != users) throw FormatError("model: user code shape");
  if (static_cast<Index>(view_kinds.size()) != views()) throw FormatError("model: view kind count");
  if (mu.size() != views()) throw FormatError("model: view weight count");
  for (const auto& Wm : W)
    if (Wm.rows() != r) throw FormatError("model: projection row count");
  if (!((D.array() == 1.0) || (D.array() == -1.0)).all()) throw FormatError("model: D is not ±1");
}

Mat sign_codes(const Mat& X) { return (X.array() >= 0.0).select(Mat::Ones(X.rows(), X.cols()), -1.0); }

namespace {

// D·Qᵀ·Σ (r×o): the item side of every S-product.
Mat items_through_factors(const Mat& D, const TruncatedSVD<double>& svd) {
  return (D * svd.right.transpose()) * svd.singulars.asDiagonal();
}

// H·P (r×o): the user side of every S-product.
Mat users_through_factors(const Mat& H, const TruncatedSVD<double>& svd) { return H * svd.left; }

Mat weighted_projection_sum(const FusionState& f, std::span<const FeatureBlock> views) {
  Mat out = Mat::Zero(f.H.rows(), f.H.cols());
  for (std::size_t m = 0; m < views.size(); ++m)
    out.noalias() += inverse_weight(f.mu(static_cast<Index>(m))) * (f.W[m] * views[m].data);
  return out;
}

double inverse_weight_sum(const Vec& mu) {
  double total = 0.0;
  for (Index m = 0; m < mu.size(); ++m) total += inverse_weight(mu(m));
  return total;
}

Mat random_orthogonal(Index r, RngStream& rng) {
  Eigen::HouseholderQR<Mat> qr(rng.gaussian_matrix(r, r));
  Mat Q = qr.householderQ() * Mat::Identity(r, r);
  for (Index j = 0; j < r; ++j)
    if (qr.matrixQR()(j, j) < 0.0) Q.col(j) = -Q.col(j);
  // Re-orthogonalize through the polar factor so RᵀR = I to rounding.
  return orthogonal_procrustes(Q);
}

}  // namespace

std::pair<FusionState, SolverState> init_state(std::span<const FeatureBlock> views,
                                               const TruncatedSVD<double>& svdS, const Hyperparams& hyper) {
  hyper.validate();
  if (views.empty()) throw ParameterError("init_state: at least one view is required");
  const Index r = hyper.bits;
  const Index n = svdS.source_rows;
  const Index m = svdS.source_cols;
  for (const auto& v : views)
    if (v.users() != n) throw ParameterError("init_state: view user count differs from the rating matrix");

  FusionState f;
  f.rank_budget = hyper.resolved_rank_budget();
  f.gamma = hyper.gamma;
  RngStream h_rng(hyper.seed, "init-H");
  f.H = h_rng.gaussian_matrix(r, n);
  f.mu = Vec::Constant(static_cast<Index>(views.size()), 1.0 / static_cast<double>(views.size()));
  for (const auto& v : views) {
    f.W.push_back(Mat::Zero(r, v.dim()));
    f.V.push_back(Mat(r, 0));
  }

  SolverState s;
  s.lambda = hyper.lambda;
  s.svd = svdS;
  RngStream r_rng(hyper.seed, "init-R");
  s.R = random_orthogonal(r, r_rng);
  s.ZR = s.R;
  s.GR = Mat::Zero(r, r);
  s.B = sign_codes(s.R * f.H);
  RngStream d_rng(hyper.seed, "init-D");
  s.D = sign_codes(d_rng.gaussian_matrix(r, m));
  return {std::move(f), std::move(s)};
}

Mat rotation_target(const SolverState& s, const FusionState& f, const Hyperparams& hyper) {
  const Mat& H = f.H;
  Mat HHt = H * H.transpose();
  Mat C = 2.0 * hyper.alpha * (items_through_factors(s.D, s.svd) * users_through_factors(H, s.svd).transpose());
  C.noalias() -= hyper.alpha * ((s.D * s.D.transpose()) * s.ZR) * HHt;
  C.noalias() += 2.0 * hyper.beta * (s.B * H.transpose());
  C += s.lambda * s.ZR - s.GR;
  return C;
}

Mat update_rotation(const SolverState& s, const FusionState& f, const Hyperparams& hyper) {
  return orthogonal_procrustes(rotation_target(s, f, hyper));
}

Mat update_H(const SolverState& s, const FusionState& f, std::span<const FeatureBlock> views,
             const Hyperparams& hyper) {
  Mat RtD = s.R.transpose() * s.D;  // r×m
  Mat lhs = hyper.alpha * (RtD * RtD.transpose());
  lhs.diagonal().array() += inverse_weight_sum(f.mu) + hyper.beta;

  Mat rhs = weighted_projection_sum(f, views);
  // αRᵀD·Sᵀ = αRᵀ(D·Qᵀ·Σ)·Pᵀ
  rhs.noalias() += hyper.alpha * ((s.R.transpose() * items_through_factors(s.D, s.svd)) * s.svd.left.transpose());
  rhs.noalias() += hyper.beta * (s.R.transpose() * s.B);

  Eigen::LLT<Mat> llt(0.5 * (lhs + lhs.transpose()));
  if (llt.info() != Eigen::Success) throw NumericError("update_H: system matrix is not positive definite");
  return llt.solve(rhs);
}

Mat update_B(const Mat& R, const Mat& H) { return sign_codes(R * H); }

Mat item_code_regression(const Mat& R, const Mat& H, const TruncatedSVD<double>& svd, double ridge) {
  Mat gram = H * H.transpose();
  gram.diagonal().array() += ridge;
  Eigen::LDLT<Mat> solver(gram);
  if (solver.info() != Eigen::Success) throw NumericError("update_D: H·Hᵀ factorization failed");
  Mat T = users_through_factors(H, svd) * svd.singulars.asDiagonal();  // r×o
  return (R * solver.solve(T)) * svd.right;                            // r×o, then r×m
}

Mat update_D(const Mat& R, const Mat& H, const TruncatedSVD<double>& svd, double ridge) {
  return sign_codes(item_code_regression(R, H, svd, ridge));
}

Mat auxiliary_target(const SolverState& s, const FusionState& f, const Hyperparams& hyper) {
  Mat C = -hyper.alpha * (((s.D * s.D.transpose()) * s.R) * (f.H * f.H.transpose()));
  C += s.lambda * s.R + s.GR;
  return C;
}

Mat update_ZR(const SolverState& s, const FusionState& f, const Hyperparams& hyper) {
  return orthogonal_procrustes(auxiliary_target(s, f, hyper));
}

Mat update_GR(const SolverState& s) { return s.GR + s.lambda * (s.R - s.ZR); }

ObjectiveTerms objective_terms(const FusionState& f, const SolverState& s, std::span<const FeatureBlock> views,
                               const Hyperparams& hyper) {
  ObjectiveTerms t;
  t.fusion = weight_objective(residual_norms(f.H, f.W, views), f.mu);
  t.lowrank = hyper.gamma * lowrank_penalty(f.W, f.V);

  // ‖S − HᵀRᵀD‖² = ‖S‖² − 2·tr(Rᵀ·D·Sᵀ·Hᵀ) + tr(RᵀDDᵀR·HHᵀ), with S in factored form.
  const Mat cross = items_through_factors(s.D, s.svd) * users_through_factors(f.H, s.svd).transpose();  // D Sᵀ Hᵀ
  const Mat RtD = s.R.transpose() * s.D;
  const double quad = ((RtD * RtD.transpose()).cwiseProduct(f.H * f.H.transpose())).sum();
  t.rating = hyper.alpha * (s.svd.frobenius_squared() - 2.0 * s.R.cwiseProduct(cross).sum() + quad);

  t.consistency = hyper.beta * (s.B - s.R * f.H).squaredNorm();
  t.augmented = 0.5 * s.lambda * (s.R - s.ZR + s.GR / s.lambda).squaredNorm();
  return t;
}

double objective(const FusionState& f, const SolverState& s, std::span<const FeatureBlock> views,
                 const Hyperparams& hyper) {
  return objective_terms(f, s, views, hyper).total();
}

namespace {

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& X, const char* step, int iteration) {
  if (!X.allFinite()) throw DivergenceError(step, iteration);
}

void require_finite(std::span<const Mat> Xs, const char* step, int iteration) {
  for (const auto& X : Xs) require_finite(X, step, iteration);
}

}  // namespace

TrainedModel train(const SpMat& S, std::span<const FeatureBlock> views, const Hyperparams& hyper,
                   const TrainOptions& options) {
  hyper.validate();
  const Index n = S.rows();
  const Index m = S.cols();
  const Index o = hyper.resolved_svd_rank(n, m);
  if (o > std::min(n, m)) throw ParameterError("train: svd rank exceeds min(n, m)");

  auto [f, s] = init_state(views, truncated_svd(S, o, options.svd), hyper);
  double previous = objective(f, s, views, hyper);
  if (!std::isfinite(previous)) throw DivergenceError("init_state", 0);

  int iteration = 0;
  using Clock = std::chrono::steady_clock;
  while (iteration < hyper.max_iters) {
    ++iteration;
    const auto start = Clock::now();

    f.mu = update_weights(f.H, f.W, views);
    require_finite(f.mu, "update_weights", iteration);
    f.W = update_projections(f.H, views, f.mu, f.V, f.gamma, hyper.ridge);
    require_finite(f.W, "update_projections", iteration);
    s.R = update_rotation(s, f, hyper);
    require_finite(s.R, "update_rotation", iteration);
    f.H = update_H(s, f, views, hyper);
    require_finite(f.H, "update_H", iteration);
    s.D = update_D(s.R, f.H, s.svd, hyper.ridge);
    s.B = update_B(s.R, f.H);
    f.V = update_lowrank_basis(f.W, f.rank_budget);
    require_finite(f.V, "update_lowrank_basis", iteration);
    s.ZR = update_ZR(s, f, hyper);
    require_finite(s.ZR, "update_ZR", iteration);
    s.GR = update_GR(s);
    require_finite(s.GR, "update_GR", iteration);

    const double value = objective(f, s, views, hyper);
    if (!std::isfinite(value)) throw DivergenceError("objective", iteration);
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    const double change = std::abs(value - previous) / std::max(std::abs(previous), 1e-300);

    if (options.progress) options.progress({iteration, value, change, seconds, (s.R - s.ZR).norm()});
    if (options.observer) options.observer(iteration, f, s);
    previous = value;
    if (change < hyper.tol) break;
  }

  TrainedModel model;
  model.users = n;
  model.items = m;
  model.W = std::move(f.W);
  model.D = std::move(s.D);
  model.R = std::move(s.R);
  model.B = std::move(s.B);
  model.mu = std::move(f.mu);
  model.hyper = hyper;
  model.iterations = iteration;
  for (const auto& v : views) model.view_kinds.push_back(v.encoder);
  return model;
}

TrainedModel train(const Dataset& dataset, std::span<const FeatureBlock> views, const Hyperparams& hyper,
                   ProgressSink progress_sink) {
  dataset.validate();
  TrainOptions options;
  options.progress = std::move(progress_sink);
  TrainedModel model = train(dataset.ratings.to_sparse(hyper.symmetric_ratings), views, hyper, options);
  model.dataset = dataset.name;
  return model;
}

}  // namespace mfdcf
