#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semcom/bitvector.hpp"

namespace semcom::fec {

// ---------------------------------------------------------------- CRC

/// CRC-16-CCITT: generator 0x1021, width 16, initial register 0xFFFF,
/// processed MSB first, no reflection, no final xor.
struct CrcSpec {
  std::uint16_t poly = 0x1021;
  std::uint16_t init = 0xFFFF;
  static constexpr int kWidth = 16;
};

std::uint16_t crc16(const BitVector& bits, const CrcSpec& spec = {});
BitVector crc_append(const BitVector& msg, const CrcSpec& spec = {});
/// False for inputs shorter than the CRC width.
bool crc_check(const BitVector& msg_with_crc, const CrcSpec& spec = {});

// ---------------------------------------------------------------- LDPC

inline constexpr int kDefaultN = 1472;
inline constexpr int kDefaultK = 460;
inline constexpr int kColumnWeight = 3;
inline constexpr double kShortenedLlr = 40.0;

/// Edge-indexed Tanner graph: edges of check c are [check_ptr[c], check_ptr[c+1]).
struct TannerGraph {
  std::vector<int> check_ptr;
  std::vector<int> edge_var;
  std::vector<std::vector<int>> var_edges;
};

/// Binary LDPC code with info bits at codeword positions [0, K) and parity
/// bits at [K, N). Immutable after construction.
class LdpcCode {
 public:
  /// Progressive-edge-growth construction with the given column weight.
  /// Retries with perturbed seeds until the parity part is invertible
  /// (N - K independent checks); throws after 10 attempts.
  static LdpcCode construct(std::uint64_t seed, int n = kDefaultN, int k = kDefaultK,
                            int column_weight = kColumnWeight);

  /// Builds a code from an arbitrary parity-check matrix given as (row, col)
  /// coordinates. Columns are permuted so that a set of independent pivot
  /// columns (chosen from the right) holds the parity bits; K = cols - rank.
  static LdpcCode from_parity_check(int rows, int cols, std::vector<std::pair<int, int>> entries,
                                    std::uint64_t seed = 0);

  int n() const noexcept { return n_; }
  int k() const noexcept { return k_; }
  int m() const noexcept { return m_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Column permutation applied to the input matrix: column_order()[new] = old.
  const std::vector<int>& column_order() const noexcept { return column_order_; }

  const std::vector<std::vector<int>>& check_neighbors() const noexcept { return checks_; }
  const std::vector<std::vector<int>>& variable_neighbors() const noexcept { return vars_; }
  std::vector<std::pair<int, int>> entries() const;
  const TannerGraph& graph() const noexcept { return graph_; }

  /// Systematic encoding; inputs shorter than K are zero padded.
  /// Throws SizeError when |info| > K.
  BitVector encode(const BitVector& info) const;

  BitVector syndrome(const BitVector& codeword) const;
  bool is_codeword(const BitVector& codeword) const;

  /// Header line "N K seed" followed by one "row col" line per nonzero.
  std::string serialize() const;
  static LdpcCode deserialize(const std::string& text);

 private:
  int n_ = 0, k_ = 0, m_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<int> column_order_;
  std::vector<std::vector<int>> checks_;  // per row, sorted column indices
  std::vector<std::vector<int>> vars_;    // per column, sorted row indices
  std::vector<std::vector<std::uint64_t>> parity_rows_;  // parity bit t = <row t, info> over GF(2)
  TannerGraph graph_;

  void build_graph();
};

/// Positions [info_len, K) that carry known zeros when the payload is shorter than K.
std::vector<int> shortened_positions(const LdpcCode& code, int info_len);

// ---------------------------------------------------------------- puncturing

/// Cumulative number of codeword positions covered after each round.
/// Transmission order is plain index order: systematic bits, then parity.
struct PunctureSchedule {
  std::vector<int> cumulative{736, 1104, 1472};

  int rounds() const noexcept { return static_cast<int>(cumulative.size()); }
  /// Throws std::invalid_argument unless strictly increasing with first >= K and last == N.
  void validate(const LdpcCode& code) const;
};

/// Codeword positions sent in `round` (1-based): [s_{r-1}, s_r) minus the
/// shortened positions. Throws std::out_of_range for a bad round.
std::vector<int> round_positions(const PunctureSchedule& schedule, int round, const LdpcCode& code,
                                 int info_len);

struct Selection {
  BitVector bits;
  std::vector<int> positions;
  std::vector<int> shortened;
};

Selection select_bits(const BitVector& codeword, const PunctureSchedule& schedule, int round,
                      const LdpcCode& code, int info_len);

struct RoundLlrs {
  int round;
  std::vector<double> llrs;  ///< one per position of round_positions(round)
};

/// Full-length LLR vector: received rounds placed at their positions (summed
/// if a position repeats), shortened positions at +kShortenedLlr, the rest 0.
std::vector<double> assemble_llrs(std::span<const RoundLlrs> received, const PunctureSchedule& schedule,
                                  const LdpcCode& code, int info_len);

struct BpResult {
  BitVector info;      ///< systematic part, length K
  BitVector codeword;  ///< hard decisions, length N
  bool converged = false;
  int iterations = 0;
};

/// Sum-product belief propagation; positive LLR means bit 0 is more likely.
/// Stops as soon as the hard decisions satisfy every check.
BpResult decode_bp(std::span<const double> llrs, const LdpcCode& code, int max_iters = 50);

}  // namespace semcom::fec
