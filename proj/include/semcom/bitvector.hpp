#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace semcom {

/// Ordered sequence of bits, one byte per bit (values 0 or 1).
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t n, bool value = false) : bits_(n, value ? 1 : 0) {}
  BitVector(std::initializer_list<int> bits);

  /// Parses a string of '0'/'1' characters; other characters are rejected.
  static BitVector from_string(const std::string& s);

  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }

  /// Bounds-checked access; throws std::out_of_range past the end.
  bool at(std::size_t i) const;
  void set(std::size_t i, bool value);

  bool operator[](std::size_t i) const { return at(i); }

  void push_back(bool b) { bits_.push_back(b ? 1 : 0); }
  void append(const BitVector& other);
  void resize(std::size_t n) { bits_.resize(n, 0); }

  BitVector slice(std::size_t begin, std::size_t end) const;
  std::size_t count_ones() const noexcept;
  std::string to_string() const;

  std::span<const std::uint8_t> raw() const noexcept { return bits_; }

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

std::size_t hamming_distance(const BitVector& a, const BitVector& b);

}  // namespace semcom
