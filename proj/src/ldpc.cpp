#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "semcom/errors.hpp"
#include "semcom/fec.hpp"
#include "semcom/rng.hpp"

namespace semcom::fec {

namespace {

using Words = std::vector<std::uint64_t>;

std::size_t word_count(int bits) { return (static_cast<std::size_t>(bits) + 63) / 64; }
bool get_bit(const Words& w, int i) { return (w[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1U; }
void flip_bit(Words& w, int i) { w[static_cast<std::size_t>(i) >> 6] ^= std::uint64_t{1} << (i & 63); }

// Progressive edge growth. Returns per-column check lists.
std::vector<std::vector<int>> peg_columns(int n, int m, int column_weight, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<int>> col_checks(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> row_vars(static_cast<std::size_t>(m));
  std::vector<int> check_deg(static_cast<std::size_t>(m), 0);
  std::vector<int> check_seen(static_cast<std::size_t>(m), -1);
  std::vector<int> var_seen(static_cast<std::size_t>(n), -1);
  int stamp = 0;

  auto choose_min_degree = [&](const std::vector<int>& candidates) {
    int best = INT32_MAX;
    for (int c : candidates) best = std::min(best, check_deg[static_cast<std::size_t>(c)]);
    std::vector<int> ties;
    for (int c : candidates)
      if (check_deg[static_cast<std::size_t>(c)] == best) ties.push_back(c);
    return ties[rng() % ties.size()];
  };

  for (int v = 0; v < n; ++v) {
    for (int e = 0; e < column_weight; ++e) {
      std::vector<int> candidates;
      if (e == 0) {
        candidates.resize(static_cast<std::size_t>(m));
        for (int c = 0; c < m; ++c) candidates[static_cast<std::size_t>(c)] = c;
      } else {
        // Breadth-first expansion of the tree rooted at v.
        ++stamp;
        std::vector<int> frontier_vars{v};
        var_seen[static_cast<std::size_t>(v)] = stamp;
        int reached = 0;
        for (;;) {
          std::vector<int> new_checks;
          for (int fv : frontier_vars)
            for (int c : col_checks[static_cast<std::size_t>(fv)])
              if (check_seen[static_cast<std::size_t>(c)] != stamp) {
                check_seen[static_cast<std::size_t>(c)] = stamp;
                new_checks.push_back(c);
              }
          if (new_checks.empty()) break;  // tree stopped growing
          if (reached + static_cast<int>(new_checks.size()) == m) {
            // every check now reachable: pick among those first reached at this depth
            candidates = new_checks;
            break;
          }
          reached += static_cast<int>(new_checks.size());
          std::vector<int> next_vars;
          for (int c : new_checks)
            for (int u : row_vars[static_cast<std::size_t>(c)])
              if (var_seen[static_cast<std::size_t>(u)] != stamp) {
                var_seen[static_cast<std::size_t>(u)] = stamp;
                next_vars.push_back(u);
              }
          frontier_vars = std::move(next_vars);
        }
        if (candidates.empty()) {
          for (int c = 0; c < m; ++c)
            if (check_seen[static_cast<std::size_t>(c)] != stamp) candidates.push_back(c);
        }
      }
      const int c = choose_min_degree(candidates);
      col_checks[static_cast<std::size_t>(v)].push_back(c);
      row_vars[static_cast<std::size_t>(c)].push_back(v);
      ++check_deg[static_cast<std::size_t>(c)];
    }
  }
  return col_checks;
}

}  // namespace

LdpcCode LdpcCode::from_parity_check(int rows, int cols, std::vector<std::pair<int, int>> entries,
                                     std::uint64_t seed) {
  if (rows <= 0 || cols <= rows) throw std::invalid_argument("LdpcCode: need 0 < rows < cols");
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());

  const std::size_t nw = word_count(cols);
  std::vector<Words> h(static_cast<std::size_t>(rows), Words(nw, 0));
  for (auto [r, c] : entries) {
    if (r < 0 || r >= rows || c < 0 || c >= cols) throw std::out_of_range("LdpcCode: entry outside matrix");
    flip_bit(h[static_cast<std::size_t>(r)], c);
  }

  // Reduced row echelon form, pivots searched from the rightmost column.
  std::vector<int> pivot_col;
  int rank = 0;
  for (int c = cols - 1; c >= 0 && rank < rows; --c) {
    int p = -1;
    for (int r = rank; r < rows; ++r)
      if (get_bit(h[static_cast<std::size_t>(r)], c)) {
        p = r;
        break;
      }
    if (p < 0) continue;
    std::swap(h[static_cast<std::size_t>(p)], h[static_cast<std::size_t>(rank)]);
    const auto& prow = h[static_cast<std::size_t>(rank)];
    for (int r = 0; r < rows; ++r) {
      if (r == rank || !get_bit(h[static_cast<std::size_t>(r)], c)) continue;
      auto& row = h[static_cast<std::size_t>(r)];
      for (std::size_t w = 0; w < nw; ++w) row[w] ^= prow[w];
    }
    pivot_col.push_back(c);
    ++rank;
  }

  std::vector<bool> is_pivot(static_cast<std::size_t>(cols), false);
  for (int c : pivot_col) is_pivot[static_cast<std::size_t>(c)] = true;

  LdpcCode code;
  code.n_ = cols;
  code.m_ = rows;
  code.k_ = cols - rank;
  code.seed_ = seed;
  std::vector<int> new_index(static_cast<std::size_t>(cols));
  for (int c = 0; c < cols; ++c)
    if (!is_pivot[static_cast<std::size_t>(c)]) code.column_order_.push_back(c);
  for (int c = 0; c < cols; ++c)
    if (is_pivot[static_cast<std::size_t>(c)]) code.column_order_.push_back(c);
  for (int i = 0; i < cols; ++i) new_index[static_cast<std::size_t>(code.column_order_[static_cast<std::size_t>(i)])] = i;

  // Parity bit for pivot column p (row i of the RREF) = sum of the row over info columns.
  std::vector<int> row_of_pivot(static_cast<std::size_t>(cols), -1);
  for (int i = 0; i < rank; ++i) row_of_pivot[static_cast<std::size_t>(pivot_col[static_cast<std::size_t>(i)])] = i;
  const std::size_t kw = word_count(code.k_);
  for (int t = code.k_; t < cols; ++t) {
    const int old_col = code.column_order_[static_cast<std::size_t>(t)];
    const auto& rref_row = h[static_cast<std::size_t>(row_of_pivot[static_cast<std::size_t>(old_col)])];
    Words g(kw, 0);
    for (int j = 0; j < code.k_; ++j)
      if (get_bit(rref_row, code.column_order_[static_cast<std::size_t>(j)])) flip_bit(g, j);
    code.parity_rows_.push_back(std::move(g));
  }

  code.checks_.assign(static_cast<std::size_t>(rows), {});
  code.vars_.assign(static_cast<std::size_t>(cols), {});
  for (auto [r, c] : entries) {
    const int nc = new_index[static_cast<std::size_t>(c)];
    code.checks_[static_cast<std::size_t>(r)].push_back(nc);
    code.vars_[static_cast<std::size_t>(nc)].push_back(r);
  }
  for (auto& row : code.checks_) std::sort(row.begin(), row.end());
  for (auto& col : code.vars_) std::sort(col.begin(), col.end());
  code.build_graph();
  return code;
}

LdpcCode LdpcCode::construct(std::uint64_t seed, int n, int k, int column_weight) {
  const int m = n - k;
  if (m <= 0 || column_weight < 1 || column_weight > m) throw std::invalid_argument("LdpcCode::construct: bad dimensions");
  for (int attempt = 0; attempt < 10; ++attempt) {
    const std::uint64_t s = attempt == 0 ? seed : derive_seed(seed, attempt);
    const auto cols = peg_columns(n, m, column_weight, s);
    std::vector<std::pair<int, int>> entries;
    for (int c = 0; c < n; ++c)
      for (int r : cols[static_cast<std::size_t>(c)]) entries.emplace_back(r, c);
    auto code = from_parity_check(m, n, std::move(entries), seed);
    if (code.k() == k) return code;
  }
  throw std::runtime_error("LdpcCode::construct: no full-rank parity-check matrix after 10 attempts");
}

void LdpcCode::build_graph() {
  graph_.check_ptr.assign(1, 0);
  graph_.edge_var.clear();
  graph_.var_edges.assign(static_cast<std::size_t>(n_), {});
  for (const auto& row : checks_) {
    for (int v : row) {
      graph_.var_edges[static_cast<std::size_t>(v)].push_back(static_cast<int>(graph_.edge_var.size()));
      graph_.edge_var.push_back(v);
    }
    graph_.check_ptr.push_back(static_cast<int>(graph_.edge_var.size()));
  }
}

std::vector<std::pair<int, int>> LdpcCode::entries() const {
  std::vector<std::pair<int, int>> out;
  for (int r = 0; r < m_; ++r)
    for (int c : checks_[static_cast<std::size_t>(r)]) out.emplace_back(r, c);
  return out;
}

BitVector LdpcCode::encode(const BitVector& info) const {
  if (info.size() > static_cast<std::size_t>(k_))
    throw SizeError("LdpcCode::encode: " + std::to_string(info.size()) + " info bits exceed K=" + std::to_string(k_));
  Words packed(word_count(k_), 0);
  for (std::size_t i = 0; i < info.size(); ++i)
    if (info[i]) flip_bit(packed, static_cast<int>(i));
  BitVector cw(static_cast<std::size_t>(n_));
  for (std::size_t i = 0; i < info.size(); ++i) cw.set(i, info[i]);
  for (int t = 0; t < n_ - k_; ++t) {
    const auto& g = parity_rows_[static_cast<std::size_t>(t)];
    int parity = 0;
    for (std::size_t w = 0; w < g.size(); ++w) parity ^= std::popcount(g[w] & packed[w]) & 1;
    cw.set(static_cast<std::size_t>(k_ + t), parity != 0);
  }
  return cw;
}

BitVector LdpcCode::syndrome(const BitVector& codeword) const {
  if (codeword.size() != static_cast<std::size_t>(n_)) throw SizeError("LdpcCode::syndrome: length mismatch");
  BitVector s(static_cast<std::size_t>(m_));
  for (int r = 0; r < m_; ++r) {
    bool acc = false;
    for (int c : checks_[static_cast<std::size_t>(r)]) acc ^= codeword[static_cast<std::size_t>(c)];
    s.set(static_cast<std::size_t>(r), acc);
  }
  return s;
}

bool LdpcCode::is_codeword(const BitVector& codeword) const { return syndrome(codeword).count_ones() == 0; }

std::string LdpcCode::serialize() const {
  std::ostringstream os;
  os << n_ << ' ' << k_ << ' ' << seed_ << '\n';
  for (auto [r, c] : entries()) os << r << ' ' << c << '\n';
  return os.str();
}

LdpcCode LdpcCode::deserialize(const std::string& text) {
  std::istringstream is(text);
  int n = 0, k = 0;
  std::uint64_t seed = 0;
  if (!(is >> n >> k >> seed)) throw std::invalid_argument("LdpcCode::deserialize: missing header");
  std::vector<std::pair<int, int>> entries;
  int r, c;
  while (is >> r >> c) entries.emplace_back(r, c);
  auto code = from_parity_check(n - k, n, std::move(entries), seed);
  if (code.k() != k) throw std::invalid_argument("LdpcCode::deserialize: rank does not match header");
  return code;
}

std::vector<int> shortened_positions(const LdpcCode& code, int info_len) {
  if (info_len < 0 || info_len > code.k()) throw SizeError("shortened_positions: info length out of range");
  std::vector<int> out;
  for (int i = info_len; i < code.k(); ++i) out.push_back(i);
  return out;
}

void PunctureSchedule::validate(const LdpcCode& code) const {
  if (cumulative.empty()) throw std::invalid_argument("PunctureSchedule: empty");
  if (cumulative.front() < code.k()) throw std::invalid_argument("PunctureSchedule: first round below K");
  if (cumulative.back() != code.n()) throw std::invalid_argument("PunctureSchedule: last round must equal N");
  for (std::size_t i = 1; i < cumulative.size(); ++i)
    if (cumulative[i] <= cumulative[i - 1]) throw std::invalid_argument("PunctureSchedule: not strictly increasing");
}

std::vector<int> round_positions(const PunctureSchedule& schedule, int round, const LdpcCode& code, int info_len) {
  if (round < 1 || round > schedule.rounds()) throw std::out_of_range("round_positions: round out of range");
  if (info_len < 0 || info_len > code.k()) throw SizeError("round_positions: info length out of range");
  const int begin = round == 1 ? 0 : schedule.cumulative[static_cast<std::size_t>(round - 2)];
  const int end = schedule.cumulative[static_cast<std::size_t>(round - 1)];
  std::vector<int> out;
  for (int i = begin; i < end; ++i)
    if (i < info_len || i >= code.k()) out.push_back(i);
  return out;
}

Selection select_bits(const BitVector& codeword, const PunctureSchedule& schedule, int round, const LdpcCode& code,
                      int info_len) {
  if (codeword.size() != static_cast<std::size_t>(code.n())) throw SizeError("select_bits: codeword length mismatch");
  Selection sel;
  sel.positions = round_positions(schedule, round, code, info_len);
  sel.shortened = shortened_positions(code, info_len);
  for (int p : sel.positions) sel.bits.push_back(codeword[static_cast<std::size_t>(p)]);
  return sel;
}

std::vector<double> assemble_llrs(std::span<const RoundLlrs> received, const PunctureSchedule& schedule,
                                  const LdpcCode& code, int info_len) {
  std::vector<double> llr(static_cast<std::size_t>(code.n()), 0.0);
  for (const auto& rx : received) {
    const auto pos = round_positions(schedule, rx.round, code, info_len);
    if (pos.size() != rx.llrs.size()) throw SizeError("assemble_llrs: llr count does not match the round");
    for (std::size_t i = 0; i < pos.size(); ++i) llr[static_cast<std::size_t>(pos[i])] += rx.llrs[i];
  }
  for (int p : shortened_positions(code, info_len)) llr[static_cast<std::size_t>(p)] = kShortenedLlr;
  return llr;
}

BpResult decode_bp(std::span<const double> llrs, const LdpcCode& code, int max_iters) {
  const int n = code.n();
  if (llrs.size() != static_cast<std::size_t>(n)) throw SizeError("decode_bp: llr length must equal N");
  const auto& g = code.graph();
  const std::size_t edges = g.edge_var.size();
  constexpr double kMaxTanh = 1.0 - 1e-15;

  std::vector<double> v2c(edges), c2v(edges, 0.0), t(edges), fwd, bwd;
  for (std::size_t e = 0; e < edges; ++e) v2c[e] = llrs[static_cast<std::size_t>(g.edge_var[e])];

  BpResult res;
  res.codeword = BitVector(static_cast<std::size_t>(n));
  auto hard_decide = [&](bool with_messages) {
    for (int v = 0; v < n; ++v) {
      double total = llrs[static_cast<std::size_t>(v)];
      if (with_messages)
        for (int e : g.var_edges[static_cast<std::size_t>(v)]) total += c2v[static_cast<std::size_t>(e)];
      res.codeword.set(static_cast<std::size_t>(v), total < 0.0);
    }
  };
  auto syndrome_ok = [&] {
    for (int c = 0; c < code.m(); ++c) {
      bool acc = false;
      for (int e = g.check_ptr[static_cast<std::size_t>(c)]; e < g.check_ptr[static_cast<std::size_t>(c) + 1]; ++e)
        acc ^= res.codeword[static_cast<std::size_t>(g.edge_var[static_cast<std::size_t>(e)])];
      if (acc) return false;
    }
    return true;
  };

  hard_decide(false);
  res.converged = syndrome_ok();
  while (!res.converged && res.iterations < max_iters) {
    ++res.iterations;
    // check-node update: leave-one-out tanh products
    for (int c = 0; c < code.m(); ++c) {
      const auto b = static_cast<std::size_t>(g.check_ptr[static_cast<std::size_t>(c)]);
      const auto end = static_cast<std::size_t>(g.check_ptr[static_cast<std::size_t>(c) + 1]);
      const std::size_t deg = end - b;
      fwd.assign(deg + 1, 1.0);
      bwd.assign(deg + 1, 1.0);
      for (std::size_t i = 0; i < deg; ++i) t[b + i] = std::tanh(0.5 * v2c[b + i]);
      for (std::size_t i = 0; i < deg; ++i) fwd[i + 1] = fwd[i] * t[b + i];
      for (std::size_t i = deg; i > 0; --i) bwd[i - 1] = bwd[i] * t[b + i - 1];
      for (std::size_t i = 0; i < deg; ++i) {
        const double p = std::clamp(fwd[i] * bwd[i + 1], -kMaxTanh, kMaxTanh);
        c2v[b + i] = 2.0 * std::atanh(p);
      }
    }
    // variable-node update
    for (int v = 0; v < n; ++v) {
      const auto& ve = g.var_edges[static_cast<std::size_t>(v)];
      double total = llrs[static_cast<std::size_t>(v)];
      for (int e : ve) total += c2v[static_cast<std::size_t>(e)];
      for (int e : ve) v2c[static_cast<std::size_t>(e)] = total - c2v[static_cast<std::size_t>(e)];
      res.codeword.set(static_cast<std::size_t>(v), total < 0.0);
    }
    res.converged = syndrome_ok();
  }
  res.info = res.codeword.slice(0, static_cast<std::size_t>(code.k()));
  return res;
}

}  // namespace semcom::fec
