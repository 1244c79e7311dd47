#include "semcom/bitvector.hpp"

#include <stdexcept>

namespace semcom {

BitVector::BitVector(std::initializer_list<int> bits) {
  bits_.reserve(bits.size());
  for (int b : bits) bits_.push_back(b ? 1 : 0);
}

BitVector BitVector::from_string(const std::string& s) {
  BitVector v;
  v.bits_.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') throw std::invalid_argument("BitVector::from_string: not a bit character");
    v.bits_.push_back(c == '1' ? 1 : 0);
  }
  return v;
}

bool BitVector::at(std::size_t i) const {
  if (i >= bits_.size()) throw std::out_of_range("BitVector index out of range");
  return bits_[i] != 0;
}

void BitVector::set(std::size_t i, bool value) {
  if (i >= bits_.size()) throw std::out_of_range("BitVector index out of range");
  bits_[i] = value ? 1 : 0;
}

void BitVector::append(const BitVector& other) {
  bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end());
}

BitVector BitVector::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > bits_.size()) throw std::out_of_range("BitVector::slice out of range");
  BitVector out;
  out.bits_.assign(bits_.begin() + static_cast<std::ptrdiff_t>(begin),
                   bits_.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

std::size_t BitVector::count_ones() const noexcept {
  std::size_t n = 0;
  for (auto b : bits_) n += b;
  return n;
}

std::string BitVector::to_string() const {
  std::string s;
  s.reserve(bits_.size());
  for (auto b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

std::size_t hamming_distance(const BitVector& a, const BitVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("hamming_distance: length mismatch");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a.raw()[i] != b.raw()[i];
  return d;
}

}  // namespace semcom
