#include "semcom/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "semcom/errors.hpp"
#include "semcom/rng.hpp"

namespace semcom::corpus {

namespace {

bool is_strippable(char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?': case '"': case '(': case ')':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string Sentence::text() const { return detokenize(tokens); }

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    std::size_t b = i, e = j;
    while (b < e && is_strippable(line[b])) ++b;
    while (e > b && is_strippable(line[e - 1])) --e;
    if (e > b) {
      std::string tok(line.substr(b, e - b));
      for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.push_back(std::move(tok));
    }
    i = j;
  }
  return out;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s.push_back(' ');
    s += tokens[i];
  }
  return s;
}

LoadResult filter_lines(const std::vector<std::string>& lines, int min_words, int max_words) {
  if (min_words < 1 || max_words < min_words) throw std::invalid_argument("filter_lines: bad length bounds");
  LoadResult result;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto tokens = tokenize(lines[i]);
    const auto n = static_cast<int>(tokens.size());
    if (n < min_words || n > max_words) {
      ++result.dropped;
      continue;
    }
    result.sentences.push_back(Sentence{lines[i], std::move(tokens), i});
  }
  return result;
}

LoadResult load_corpus(const std::filesystem::path& path, int min_words, int max_words) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read corpus file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  auto result = filter_lines(lines, min_words, max_words);
  if (result.sentences.empty()) throw EmptyCorpusError("no sentences within length bounds in " + path.string());
  return result;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    // unbiased draw in [0, i)
    const std::uint64_t bound = i;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
      r = rng();
    } while (r >= limit);
    std::swap(idx[i - 1], idx[r % bound]);
  }
  return idx;
}

CorpusSplit split_corpus(const std::vector<Sentence>& sentences, std::size_t n_train,
                         std::size_t n_test, std::uint64_t seed) {
  if (n_train + n_test > sentences.size()) {
    throw SizeError("split_corpus: requested " + std::to_string(n_train + n_test) + " sentences but only " +
                    std::to_string(sentences.size()) + " available");
  }
  const auto perm = seeded_permutation(sentences.size(), seed);
  CorpusSplit split;
  split.seed = seed;
  split.train.reserve(n_train);
  split.test.reserve(n_test);
  for (std::size_t i = 0; i < n_train; ++i) split.train.push_back(sentences[perm[i]]);
  for (std::size_t i = 0; i < n_test; ++i) split.test.push_back(sentences[perm[n_train + i]]);
  return split;
}

Vocab::Vocab() {
  add("<pad>", 0);
  add("<unk>", 0);
  add("<eos>", 0);
}

void Vocab::add(const std::string& token, std::size_t count) {
  if (ids_.contains(token)) throw std::invalid_argument("Vocab::add: duplicate token " + token);
  ids_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
  counts_.push_back(count);
}

int Vocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("Vocab::token: id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocab::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  for (int i : ids) {
    if (i == kPad || i == kEos) break;
    out.push_back(token(i));
  }
  return out;
}

std::string Vocab::serialize() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < tokens_.size(); ++i) os << tokens_[i] << '\t' << counts_[i] << '\n';
  return os.str();
}

Vocab Vocab::deserialize(const std::string& text) {
  Vocab v;
  std::istringstream is(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::invalid_argument("Vocab::deserialize: malformed line");
    std::string tok = line.substr(0, tab);
    std::size_t count = std::stoull(line.substr(tab + 1));
    if (row < 3) {
      if (tok != v.tokens_[row]) throw std::invalid_argument("Vocab::deserialize: reserved ids out of order");
      v.counts_[row] = count;
    } else {
      v.add(tok, count);
    }
    ++row;
  }
  return v;
}

Vocab build_vocab(const std::vector<Sentence>& train, int max_size) {
  if (max_size < 4) throw std::invalid_argument("build_vocab: max_size must be at least 4");
  std::map<std::string, std::size_t> freq;
  for (const auto& s : train)
    for (const auto& t : s.tokens) ++freq[t];
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab v;
  const auto keep = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(max_size - 3));
  for (std::size_t i = 0; i < ranked.size() && v.size() < 3 + static_cast<int>(keep); ++i) {
    if (v.contains(ranked[i].first)) continue;  // literal "<unk>" etc. in the text
    v.add(ranked[i].first, ranked[i].second);
  }
  return v;
}

std::string split_manifest(const std::vector<Sentence>& part) {
  std::ostringstream os;
  for (const auto& s : part) os << s.line << '\n';
  return os.str();
}

}  // namespace semcom::corpus
