#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "semcom/bitvector.hpp"

namespace semcom::huffman {

/// Symbols are byte values 0..255 plus the end-of-sentence marker.
using Symbol = int;
inline constexpr Symbol kEos = 256;
inline constexpr char kFallback = '_';

/// Lowercase letters, digits, space, apostrophe, the fallback character and EOS.
std::vector<Symbol> default_alphabet();

/// Replaces characters outside the default alphabet with the fallback character.
std::string normalize(std::string_view text);

/// Character counts over normalized texts, add-one smoothed over the default
/// alphabet; EOS is counted once per text.
std::map<Symbol, std::uint64_t> char_frequencies(const std::vector<std::string>& texts);

struct Codeword {
  Symbol symbol;
  int length;
  BitVector bits;
};

class HuffmanTable {
 public:
  /// Canonical code from per-symbol lengths (all lengths >= 1).
  static HuffmanTable from_lengths(const std::map<Symbol, int>& lengths);

  const std::vector<Codeword>& codewords() const noexcept { return codewords_; }
  const Codeword& codeword(Symbol s) const;
  bool contains(Symbol s) const;
  int length(Symbol s) const { return codeword(s).length; }

  /// Walks the prefix tree from `node`; returns child index, -1 when absent.
  int child(int node, bool bit) const { return trie_[static_cast<std::size_t>(node)][bit ? 1 : 0]; }
  /// Symbol at a leaf node, -1 for internal nodes.
  Symbol leaf_symbol(int node) const { return leaf_[static_cast<std::size_t>(node)]; }

  /// Expected code length under the given frequencies.
  double average_length(const std::map<Symbol, std::uint64_t>& freq) const;

  /// "symbol length" per line in canonical order, symbols as decimal codes.
  std::string serialize() const;
  static HuffmanTable deserialize(const std::string& text);

 private:
  std::vector<Codeword> codewords_;  // canonical order: (length, symbol)
  std::map<Symbol, std::size_t> index_;
  std::vector<std::array<int, 2>> trie_;
  std::vector<Symbol> leaf_;
};

/// Optimal prefix code lengths (Huffman), then canonical codewords. Merge ties
/// are broken by the smallest symbol contained in each subtree.
HuffmanTable build_table(const std::map<Symbol, std::uint64_t>& frequencies);

/// Per-character codewords of normalize(text) followed by the EOS codeword.
BitVector encode(std::string_view text, const HuffmanTable& table);

struct DecodeResult {
  std::string text;
  bool truncated = false;      ///< stream ended before EOS (possibly mid-symbol)
  bool trailing_bits = false;  ///< bits remain after EOS
  bool invalid_path = false;   ///< hit an unused branch of an incomplete code
  bool clean() const noexcept { return !truncated && !trailing_bits && !invalid_path; }
};

DecodeResult decode(const BitVector& bits, const HuffmanTable& table);

/// Empirical entropy in bits/symbol of a frequency map.
double entropy(const std::map<Symbol, std::uint64_t>& freq);

}  // namespace semcom::huffman
