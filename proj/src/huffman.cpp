#include "semcom/huffman.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace semcom::huffman {

namespace {

bool in_alphabet(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == ' ' || c == '\'' ||
         c == static_cast<unsigned char>(kFallback);
}

}  // namespace

std::vector<Symbol> default_alphabet() {
  std::vector<Symbol> out;
  out.push_back(' ');
  out.push_back('\'');
  for (char c = '0'; c <= '9'; ++c) out.push_back(c);
  out.push_back(kFallback);
  for (char c = 'a'; c <= 'z'; ++c) out.push_back(c);
  out.push_back(kEos);
  std::sort(out.begin(), out.end());
  return out;
}

std::string normalize(std::string_view text) {
  std::string out(text);
  for (auto& c : out)
    if (!in_alphabet(static_cast<unsigned char>(c))) c = kFallback;
  return out;
}

std::map<Symbol, std::uint64_t> char_frequencies(const std::vector<std::string>& texts) {
  std::map<Symbol, std::uint64_t> freq;
  for (Symbol s : default_alphabet()) freq[s] = 1;
  for (const auto& t : texts) {
    for (char c : normalize(t)) ++freq[static_cast<unsigned char>(c)];
    ++freq[kEos];
  }
  return freq;
}

HuffmanTable HuffmanTable::from_lengths(const std::map<Symbol, int>& lengths) {
  if (lengths.empty()) throw std::invalid_argument("HuffmanTable: empty alphabet");
  std::vector<std::pair<int, Symbol>> order;
  for (auto [s, len] : lengths) {
    if (len < 1 || len > 63) throw std::invalid_argument("HuffmanTable: code length out of range");
    order.emplace_back(len, s);
  }
  std::sort(order.begin(), order.end());

  HuffmanTable t;
  t.trie_.push_back({-1, -1});
  t.leaf_.push_back(-1);
  std::uint64_t code = 0;
  int prev_len = order.front().first;
  double kraft = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto [len, sym] = order[i];
    if (i > 0) {
      ++code;
      code <<= (len - prev_len);
    }
    prev_len = len;
    kraft += std::ldexp(1.0, -len);
    if (kraft > 1.0 + 1e-12) throw std::invalid_argument("HuffmanTable: lengths violate the Kraft inequality");

    BitVector bits(static_cast<std::size_t>(len));
    for (int b = 0; b < len; ++b) bits.set(static_cast<std::size_t>(b), (code >> (len - 1 - b)) & 1U);

    int node = 0;
    for (int b = 0; b < len; ++b) {
      const int bit = bits[static_cast<std::size_t>(b)] ? 1 : 0;
      if (t.trie_[static_cast<std::size_t>(node)][bit] < 0) {
        t.trie_[static_cast<std::size_t>(node)][bit] = static_cast<int>(t.trie_.size());
        t.trie_.push_back({-1, -1});
        t.leaf_.push_back(-1);
      }
      node = t.trie_[static_cast<std::size_t>(node)][bit];
    }
    t.leaf_[static_cast<std::size_t>(node)] = sym;
    t.index_[sym] = t.codewords_.size();
    t.codewords_.push_back(Codeword{sym, len, std::move(bits)});
  }
  return t;
}

const Codeword& HuffmanTable::codeword(Symbol s) const {
  auto it = index_.find(s);
  if (it == index_.end()) throw std::out_of_range("HuffmanTable: symbol not in alphabet");
  return codewords_[it->second];
}

bool HuffmanTable::contains(Symbol s) const { return index_.contains(s); }

double HuffmanTable::average_length(const std::map<Symbol, std::uint64_t>& freq) const {
  double total = 0.0, weighted = 0.0;
  for (auto [s, n] : freq) {
    total += static_cast<double>(n);
    weighted += static_cast<double>(n) * length(s);
  }
  return weighted / total;
}

std::string HuffmanTable::serialize() const {
  std::ostringstream os;
  for (const auto& c : codewords_) os << c.symbol << ' ' << c.length << '\n';
  return os.str();
}

HuffmanTable HuffmanTable::deserialize(const std::string& text) {
  std::istringstream is(text);
  std::map<Symbol, int> lengths;
  Symbol s;
  int len;
  while (is >> s >> len) lengths[s] = len;
  return from_lengths(lengths);
}

HuffmanTable build_table(const std::map<Symbol, std::uint64_t>& frequencies) {
  std::map<Symbol, std::uint64_t> freq;
  for (auto [s, n] : frequencies)
    if (n > 0) freq[s] = n;
  if (freq.empty()) throw std::invalid_argument("build_table: no symbol with positive count");
  if (freq.size() == 1) return HuffmanTable::from_lengths({{freq.begin()->first, 1}});

  struct Node {
    std::uint64_t weight;
    Symbol min_symbol;
    int left, right;
  };
  std::vector<Node> nodes;
  using Key = std::tuple<std::uint64_t, Symbol, int>;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> heap;
  for (auto [s, n] : freq) {
    heap.emplace(n, s, static_cast<int>(nodes.size()));
    nodes.push_back(Node{n, s, -1, -1});
  }
  while (heap.size() > 1) {
    auto [wa, sa, a] = heap.top();
    heap.pop();
    auto [wb, sb, b] = heap.top();
    heap.pop();
    const Symbol m = std::min(sa, sb);
    heap.emplace(wa + wb, m, static_cast<int>(nodes.size()));
    nodes.push_back(Node{wa + wb, m, a, b});
  }

  std::map<Symbol, int> lengths;
  std::vector<std::pair<int, int>> stack{{std::get<2>(heap.top()), 0}};
  while (!stack.empty()) {
    auto [id, depth] = stack.back();
    stack.pop_back();
    const auto& n = nodes[static_cast<std::size_t>(id)];
    if (n.left < 0) {
      lengths[n.min_symbol] = depth;
    } else {
      stack.emplace_back(n.left, depth + 1);
      stack.emplace_back(n.right, depth + 1);
    }
  }
  return HuffmanTable::from_lengths(lengths);
}

BitVector encode(std::string_view text, const HuffmanTable& table) {
  BitVector out;
  for (char c : normalize(text)) out.append(table.codeword(static_cast<unsigned char>(c)).bits);
  out.append(table.codeword(kEos).bits);
  return out;
}

DecodeResult decode(const BitVector& bits, const HuffmanTable& table) {
  DecodeResult r;
  int node = 0;
  std::size_t i = 0;
  for (; i < bits.size(); ++i) {
    node = table.child(node, bits[i]);
    if (node < 0) {
      r.invalid_path = true;
      return r;
    }
    const Symbol s = table.leaf_symbol(node);
    if (s < 0) continue;
    if (s == kEos) {
      r.trailing_bits = i + 1 < bits.size();
      return r;
    }
    r.text.push_back(static_cast<char>(s));
    node = 0;
  }
  r.truncated = true;
  return r;
}

double entropy(const std::map<Symbol, std::uint64_t>& freq) {
  double total = 0.0;
  for (auto [s, n] : freq) total += static_cast<double>(n);
  double h = 0.0;
  for (auto [s, n] : freq) {
    if (n == 0) continue;
    const double p = static_cast<double>(n) / total;
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace semcom::huffman
