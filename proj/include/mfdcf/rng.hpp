#pragma once

#include "mfdcf/types.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace mfdcf {

/// Deterministic random stream derived from a root seed and a stream name.
///
/// Every consumer of randomness (splitting, initialization, baselines, ...)
/// asks for its own named stream, so changing how many numbers one component
/// draws never shifts another component's sequence.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view name, std::uint64_t sub = 0)
  {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : name) {
      h ^= c;
      h *= 1099511628211ull;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(h),    static_cast<std::uint32_t>(h >> 32),
                      static_cast<std::uint32_t>(sub),  static_cast<std::uint32_t>(sub >> 32)};
    engine_.seed(seq);
  }

  std::mt19937_64& engine() { return engine_; }

  double gaussian() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  template <typename Scalar = double>
  Matrix<Scalar> gaussian_matrix(Index rows, Index cols) {
    Matrix<Scalar> out(rows, cols);
    // Column-major fill order is part of the reproducibility contract.
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) out(i, j) = static_cast<Scalar>(normal_(engine_));
    return out;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace mfdcf
