#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fsmre {

/// Fixed-width bit vector. Bit 0 is the most significant (leftmost) bit, so
/// to_string() and parse() use the same order the KISS2 files do.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t width);

  /// Low `width` bits of `value`, most significant first.
  static BitVec from_uint(std::uint64_t value, std::size_t width);
  /// Accepts '0' and '1' only; throws std::invalid_argument otherwise.
  static BitVec parse(std::string_view bits);

  std::size_t width() const noexcept { return width_; }
  bool empty() const noexcept { return width_ == 0; }

  bool test(std::size_t i) const;
  void set(std::size_t i, bool value);

  std::size_t popcount() const noexcept;
  /// Value as an unsigned integer; requires width() <= 64.
  std::uint64_t to_uint() const;
  std::string to_string() const;

  friend BitVec operator^(const BitVec& a, const BitVec& b);
  friend bool operator==(const BitVec& a, const BitVec& b) = default;
  friend std::strong_ordering operator<=>(const BitVec& a, const BitVec& b);

 private:
  std::size_t width_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Number of positions where `a` and `b` differ. Throws std::invalid_argument
/// on width mismatch.
std::size_t hamming(const BitVec& a, const BitVec& b);

}  // namespace fsmre
