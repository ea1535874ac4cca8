#pragma once

// Shared generators for the unit and acceptance suites.

#include "mfdcf/rng.hpp"
#include "mfdcf/types.hpp"

#include <Eigen/QR>

#include <vector>

namespace testutil {

using mfdcf::Index;
using mfdcf::Mat;
using mfdcf::RngStream;
using mfdcf::SpMat;

inline SpMat random_sparse(Index rows, Index cols, double density, RngStream& rng) {
  std::vector<Eigen::Triplet<double>> trips;
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      if (rng.uniform() < density) trips.emplace_back(i, j, rng.gaussian());
  if (trips.empty()) trips.emplace_back(0, 0, 1.0);
  SpMat M(rows, cols);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

inline Mat random_spd(Index n, RngStream& rng) {
  Mat G = rng.gaussian_matrix(n, n);
  return G * G.transpose() + 0.1 * Mat::Identity(n, n);
}

inline Mat random_orthogonal(Index n, RngStream& rng) {
  Eigen::HouseholderQR<Mat> qr(rng.gaussian_matrix(n, n));
  Mat Q = qr.householderQ() * Mat::Identity(n, n);
  // Sign-correct so the sample is Haar distributed.
  for (Index j = 0; j < n; ++j)
    if (qr.matrixQR()(j, j) < 0) Q.col(j) = -Q.col(j);
  return Q;
}

/// ‖QᵀQ − I‖_F.
inline double gram_defect(const Mat& Q) {
  return (Q.transpose() * Q - Mat::Identity(Q.cols(), Q.cols())).norm();
}

inline Mat random_signs(Index rows, Index cols, RngStream& rng) {
  Mat S(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) S(i, j) = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return S;
}

}  // namespace testutil
