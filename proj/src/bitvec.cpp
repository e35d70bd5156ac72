#include "fsmre/bitvec.hpp"

#include <bit>
#include <stdexcept>

namespace fsmre {

namespace {
constexpr std::size_t kWordBits = 64;

std::size_t words_for(std::size_t width) { return (width + kWordBits - 1) / kWordBits; }
}  // namespace

BitVec::BitVec(std::size_t width) : width_(width), words_(words_for(width), 0) {}

BitVec BitVec::from_uint(std::uint64_t value, std::size_t width) {
  BitVec v(width);
  for (std::size_t i = 0; i < width; ++i) {
    std::size_t shift = width - 1 - i;
    if (shift < 64 && ((value >> shift) & 1U)) v.set(i, true);
  }
  return v;
}

BitVec BitVec::parse(std::string_view bits) {
  BitVec v(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      v.set(i, true);
    } else if (bits[i] != '0') {
      throw std::invalid_argument("bit string contains '" + std::string(1, bits[i]) + "'");
    }
  }
  return v;
}

bool BitVec::test(std::size_t i) const {
  if (i >= width_) throw std::out_of_range("BitVec::test index out of range");
  return (words_[i / kWordBits] >> (i % kWordBits)) & 1U;
}

void BitVec::set(std::size_t i, bool value) {
  if (i >= width_) throw std::out_of_range("BitVec::set index out of range");
  std::uint64_t mask = std::uint64_t{1} << (i % kWordBits);
  if (value) {
    words_[i / kWordBits] |= mask;
  } else {
    words_[i / kWordBits] &= ~mask;
  }
}

std::size_t BitVec::popcount() const noexcept {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::uint64_t BitVec::to_uint() const {
  if (width_ > 64) throw std::out_of_range("BitVec wider than 64 bits");
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < width_; ++i) value = (value << 1) | (test(i) ? 1U : 0U);
  return value;
}

std::string BitVec::to_string() const {
  std::string s(width_, '0');
  for (std::size_t i = 0; i < width_; ++i) {
    if (test(i)) s[i] = '1';
  }
  return s;
}

BitVec operator^(const BitVec& a, const BitVec& b) {
  if (a.width_ != b.width_) throw std::invalid_argument("BitVec xor: width mismatch");
  BitVec r(a.width_);
  for (std::size_t k = 0; k < a.words_.size(); ++k) r.words_[k] = a.words_[k] ^ b.words_[k];
  return r;
}

std::strong_ordering operator<=>(const BitVec& a, const BitVec& b) {
  if (auto c = a.width_ <=> b.width_; c != 0) return c;
  for (std::size_t i = 0; i < a.width_; ++i) {
    bool x = a.test(i);
    bool y = b.test(i);
    if (x != y) return x ? std::strong_ordering::greater : std::strong_ordering::less;
  }
  return std::strong_ordering::equal;
}

std::size_t hamming(const BitVec& a, const BitVec& b) {
  if (a.width() != b.width()) {
    throw std::invalid_argument("hamming: width mismatch (" + std::to_string(a.width()) + " vs " +
                                std::to_string(b.width()) + ")");
  }
  return (a ^ b).popcount();
}

}  // namespace fsmre
