#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semcom::corpus {

inline constexpr int kMinWords = 4;
inline constexpr int kMaxWords = 30;

struct Sentence {
  std::string raw;
  std::vector<std::string> tokens;
  std::size_t line = 0;  ///< zero-based line index in the source file

  /// Tokens joined by single spaces.
  std::string text() const;
};

struct LoadResult {
  std::vector<Sentence> sentences;
  std::size_t dropped = 0;
};

/// Lowercases, splits on whitespace, strips . , ; : ! ? " ( ) from token
/// edges and drops empty tokens.
std::vector<std::string> tokenize(std::string_view line);
std::string detokenize(const std::vector<std::string>& tokens);

LoadResult load_corpus(const std::filesystem::path& path, int min_words = kMinWords,
                       int max_words = kMaxWords);

/// Same filtering over in-memory lines; line indices are positions in `lines`.
LoadResult filter_lines(const std::vector<std::string>& lines, int min_words = kMinWords,
                        int max_words = kMaxWords);

struct CorpusSplit {
  std::vector<Sentence> train;
  std::vector<Sentence> test;
  std::uint64_t seed = 0;
};

CorpusSplit split_corpus(const std::vector<Sentence>& sentences, std::size_t n_train,
                         std::size_t n_test, std::uint64_t seed);

/// Deterministic Fisher-Yates permutation of [0, n).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kEos = 2;

  Vocab();

  int size() const noexcept { return static_cast<int>(tokens_.size()); }
  int id(const std::string& token) const;  ///< UNK when absent
  const std::string& token(int id) const;
  std::size_t count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }
  bool contains(const std::string& token) const { return ids_.contains(token); }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  /// Stops at the first PAD or EOS.
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  /// One "token<TAB>count" line per id, in id order.
  std::string serialize() const;
  static Vocab deserialize(const std::string& text);

  void add(const std::string& token, std::size_t count);

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, int> ids_;
};

/// Keeps the max_size - 3 most frequent tokens, ties broken lexicographically.
Vocab build_vocab(const std::vector<Sentence>& train, int max_size = 20000);

/// Manifest listing source line indices, one per line.
std::string split_manifest(const std::vector<Sentence>& part);

}  // namespace semcom::corpus
