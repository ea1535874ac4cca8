#pragma once

// Bit-packed ±1 hash codes. Bit k of a code is set when entry k is +1; bits
// fill 64-bit words from the least significant end.

#include "mfdcf/types.hpp"

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mfdcf {

class PackedCodes {
 public:
  PackedCodes() = default;
  PackedCodes(Index bits, Index count);

  /// Packs the columns of a ±1 matrix (bits×count). Throws ParameterError on
  /// any entry other than ±1.
  static PackedCodes from_signs(const Mat& codes);
  Mat to_signs() const;

  Index bits() const { return bits_; }
  Index size() const { return count_; }
  Index words_per_code() const { return words_; }

  std::span<const std::uint64_t> code(Index j) const {
    return {data_.data() + j * words_, static_cast<std::size_t>(words_)};
  }
  std::span<std::uint64_t> code(Index j) { return {data_.data() + j * words_, static_cast<std::size_t>(words_)}; }

  bool bit(Index j, Index k) const { return (code(j)[k / 64] >> (k % 64)) & 1u; }
  void set_bit(Index j, Index k, bool plus);

  const std::vector<std::uint64_t>& words() const { return data_; }

  friend bool operator==(const PackedCodes&, const PackedCodes&) = default;

 private:
  Index bits_ = 0;
  Index count_ = 0;
  Index words_ = 0;
  std::vector<std::uint64_t> data_;
};

inline Index hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  Index total = 0;
  for (std::size_t w = 0; w < a.size(); ++w) total += std::popcount(a[w] ^ b[w]);
  return total;
}

/// bᵀd for ±1 codes of length r, computed as r − 2·hamming.
inline Index code_inner_product(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b, Index bits) {
  return bits - 2 * hamming_distance(a, b);
}

/// ½ + bᵀd / (2r), in [0, 1].
double hamming_score(const Vec& b, const Vec& d);
double hamming_score(const PackedCodes& users, Index u, const PackedCodes& items, Index j);

/// One line per code, '+' and '-' per bit.
std::string render_signs(const PackedCodes& codes);

}  // namespace mfdcf
