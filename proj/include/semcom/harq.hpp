#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semcom/codec.hpp"
#include "semcom/corpus.hpp"
#include "semcom/fec.hpp"
#include "semcom/huffman.hpp"
#include "semcom/link.hpp"
#include "semcom/ofdm.hpp"

namespace semcom::harq {

enum class Scheme { conventional, scharq };
enum class Acceptance { crc, exact, similarity };

struct HarqPolicy {
  Scheme scheme = Scheme::conventional;
  int max_rounds = 3;
  Acceptance acceptance = Acceptance::crc;
  double threshold = 0.98;
  int initial_blocks = 2;

  static HarqPolicy conventional();
  static HarqPolicy scharq_exact();
  static HarqPolicy scharq_similarity(double threshold = 0.98);

  /// "conventional", "scharq-exact" or "scharq-sim<threshold>".
  std::string label() const;
  std::string acceptance_name() const;
  static HarqPolicy parse(const std::string& label);
  void validate() const;
};

struct SessionResult {
  bool success = false;
  int rounds = 0;
  std::size_t bits = 0;  ///< payload bits sent over the air, all rounds
  std::vector<std::size_t> round_bits;
  double similarity = 0.0;
  std::vector<std::string> decoded;
  std::string scheme;
  link::PhyCounter phy;
};

struct ConventionalContext {
  const fec::LdpcCode* code = nullptr;
  fec::PunctureSchedule schedule;
  const huffman::HuffmanTable* table = nullptr;
  ofdm::OfdmConfig ofdm;
  int max_iters = 50;
};

struct ScharqContext {
  const codec::SemanticModel* model = nullptr;
  const corpus::Vocab* vocab = nullptr;
  ofdm::OfdmConfig ofdm;
};

/// Payload capacity of one LDPC block once the CRC is attached.
int segment_capacity(const fec::LdpcCode& code);
/// Splits a payload into ceil(n / capacity) segments of near-equal size.
std::vector<BitVector> segment_payload(const BitVector& payload, int capacity);

/// Huffman + CRC + rate-compatible LDPC over 16-QAM OFDM. Segments that
/// pass their CRC are acknowledged and not sent again; the session succeeds
/// when every segment has passed.
SessionResult run_conventional(const std::vector<std::string>& tokens, double snr_db, const HarqPolicy& policy,
                               const ConventionalContext& ctx, Rng& rng);

/// Incremental semantic blocks: round 1 carries blocks 1..k0, each later
/// round one more block; the receiver decodes from every block received so
/// far. Acceptance compares against the transmitted sentence (genie oracle).
SessionResult run_scharq(const std::vector<std::string>& tokens, double snr_db, const HarqPolicy& policy,
                         const ScharqContext& ctx, Rng& rng);

struct WilsonInterval {
  double low, high;
};
WilsonInterval wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

struct SweepRow {
  double snr_db = 0.0;
  std::string scheme;
  std::string acceptance;
  std::string metric = "word-edit";
  double success_rate = 0.0;
  WilsonInterval wilson{0.0, 0.0};
  double mean_bits = 0.0;
  double mean_similarity = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

using SweepTable = std::vector<SweepRow>;

struct SweepContext {
  const ConventionalContext* conventional = nullptr;
  const ScharqContext* scharq = nullptr;
};

/// Per-session seed; depends on the scheme family (not the acceptance rule) so
/// that SCHARQ variants see identical channel realizations.
std::uint64_t session_seed(std::uint64_t base, Scheme scheme, double snr_db, std::size_t index);

/// Runs every sentence once at one operating point; results are indexed by sentence.
std::vector<SessionResult> run_point(const HarqPolicy& policy, double snr_db,
                                     const std::vector<std::vector<std::string>>& sentences, const SweepContext& ctx,
                                     std::uint64_t base_seed, int workers = 1);

SweepRow summarize(const HarqPolicy& policy, double snr_db, const std::vector<SessionResult>& results,
                   std::uint64_t base_seed);

/// Rows sorted by (scheme label, snr).
SweepTable sweep(const std::vector<HarqPolicy>& schemes, const std::vector<double>& snrs,
                 const std::vector<std::vector<std::string>>& sentences, const SweepContext& ctx,
                 std::uint64_t base_seed, int workers = 1);

inline constexpr const char* kSweepCsvHeader =
    "snr_db,scheme,acceptance,metric_name,success_rate,wilson_low,wilson_high,mean_bits,mean_similarity,n,seed";

std::string to_csv(const SweepTable& table);

/// %.17g formatting used for every real in CSV output.
std::string format_real(double v);

}  // namespace semcom::harq
