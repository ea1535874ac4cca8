#include "mfdcf/codes.hpp"

namespace mfdcf {

PackedCodes::PackedCodes(Index bits, Index count)
    : bits_(bits), count_(count), words_((bits + 63) / 64) {
  if (bits < 0 || count < 0) throw ParameterError("packed codes: negative shape");
  data_.assign(static_cast<std::size_t>(words_ * count_), 0);
}

void PackedCodes::set_bit(Index j, Index k, bool plus) {
  const std::uint64_t mask = std::uint64_t{1} << (k % 64);
  auto words = code(j);
  if (plus)
    words[k / 64] |= mask;
  else
    words[k / 64] &= ~mask;
}

PackedCodes PackedCodes::from_signs(const Mat& codes) {
  PackedCodes out(codes.rows(), codes.cols());
  for (Index j = 0; j < codes.cols(); ++j)
    for (Index k = 0; k < codes.rows(); ++k) {
      const double v = codes(k, j);
      if (v != 1.0 && v != -1.0) throw ParameterError("packed codes: entries must be exactly +1 or -1");
      if (v > 0) out.set_bit(j, k, true);
    }
  return out;
}

Mat PackedCodes::to_signs() const {
  Mat out(bits_, count_);
  for (Index j = 0; j < count_; ++j)
    for (Index k = 0; k < bits_; ++k) out(k, j) = bit(j, k) ? 1.0 : -1.0;
  return out;
}

double hamming_score(const Vec& b, const Vec& d) {
  if (b.size() != d.size()) throw ParameterError("hamming_score: code lengths differ");
  if (b.size() == 0) throw ParameterError("hamming_score: empty codes");
  const PackedCodes pb = PackedCodes::from_signs(b);
  const PackedCodes pd = PackedCodes::from_signs(d);
  return hamming_score(pb, 0, pd, 0);
}

double hamming_score(const PackedCodes& users, Index u, const PackedCodes& items, Index j) {
  if (users.bits() != items.bits()) throw ParameterError("hamming_score: code lengths differ");
  const Index r = users.bits();
  const Index dot = code_inner_product(users.code(u), items.code(j), r);
  return 0.5 + static_cast<double>(dot) / (2.0 * static_cast<double>(r));
}

std::string render_signs(const PackedCodes& codes) {
  std::string out;
  out.reserve(static_cast<std::size_t>((codes.bits() + 1) * codes.size()));
  for (Index j = 0; j < codes.size(); ++j) {
    for (Index k = 0; k < codes.bits(); ++k) out.push_back(codes.bit(j, k) ? '+' : '-');
    out.push_back('\n');
  }
  return out;
}

}  // namespace mfdcf
