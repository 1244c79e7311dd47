#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "semcom/codec.hpp"
#include "semcom/constellation_training.hpp"
#include "semcom/corpus.hpp"
#include "semcom/fec.hpp"
#include "semcom/harq.hpp"
#include "semcom/huffman.hpp"
#include "semcom/ofdm.hpp"

namespace semcom::experiment {

/// Invalid or inconsistent configuration; the CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required artifact is missing or unreadable; exit code 2.
class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kToolVersion = "0.1.0";

struct CorpusConfig {
  std::string path;
  int min_words = corpus::kMinWords;
  int max_words = corpus::kMaxWords;
  std::size_t n_train = 100000;
  std::size_t n_test = 10000;
  std::uint64_t split_seed = 7;
  int vocab_max = 20000;
};

struct CodecTrainConfig {
  codec::CodecConfig codec;  ///< vocab_size filled in from the prepared vocabulary
  int epochs = 10;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double flip_low = 0.0;
  double flip_high = 0.15;
  double keep_prob = 0.7;
  double holdout_fraction = 0.05;
  std::size_t max_sentences = 60000;  ///< 0 = whole training split
};

struct ConstellationConfig {
  CodecTrainConfig codec;  ///< the B=320 single-block codec
  double snr_train_db = 8.0;
  int epochs = 3;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double codec_learning_rate = 2e-4;
  bool joint = true;
  bool init_qam = true;
  std::size_t max_sentences = 60000;
};

struct LdpcConfig {
  int n = fec::kDefaultN;
  int k = fec::kDefaultK;
  int column_weight = fec::kColumnWeight;
  std::uint64_t seed = 11;
  int max_iters = 50;
  std::vector<int> puncture{736, 1104, 1472};
};

struct HarqConfig {
  std::vector<std::string> schemes{"conventional", "scharq-exact", "scharq-sim0.98"};
  int conventional_rounds = 3;
  int scharq_rounds = 5;
  int initial_blocks = 2;
};

struct SweepConfig {
  std::vector<double> snr_db{0, 4, 8, 12, 16};
  std::size_t sentences = 2000;
};

struct ExperimentConfig {
  CorpusConfig corpus;
  CodecTrainConfig codec;
  ConstellationConfig constellation;
  ofdm::OfdmConfig ofdm;
  LdpcConfig ldpc;
  HarqConfig harq;
  SweepConfig sweep;
  SweepConfig modexp{{4, 8, 12, 16, 20}, 2000};
  std::string out = "run";
  std::uint64_t seed = 1;
  int workers = 1;

  ExperimentConfig();

  /// Every field, defaults included.
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Throws ConfigError. `need_corpus` also checks that the corpus file exists.
  void validate(bool need_corpus) const;

  std::vector<harq::HarqPolicy> policies() const;
};

/// File names inside the output directory.
namespace files {
inline constexpr const char* kTrainSplit = "train_split.txt";
inline constexpr const char* kTestSplit = "test_split.txt";
inline constexpr const char* kVocab = "vocab.tsv";
inline constexpr const char* kHuffman = "huffman.txt";
inline constexpr const char* kLdpc = "ldpc.txt";
inline constexpr const char* kCodec = "codec.json";
inline constexpr const char* kCodecLoss = "codec_loss.csv";
inline constexpr const char* kModCodec = "codec_b320.json";
inline constexpr const char* kModCodecLoss = "codec_b320_loss.csv";
inline constexpr const char* kJointCodec = "codec_b320_joint.json";
inline constexpr const char* kConstellation = "constellation.json";
inline constexpr const char* kConstellationLoss = "constellation_loss.csv";
inline constexpr const char* kSweep = "sweep.csv";
inline constexpr const char* kModexp = "modexp.csv";
inline constexpr const char* kScatter = "constellation_scatter.json";
inline constexpr const char* kManifest = "manifest.json";
}  // namespace files

/// Hex SHA-256 of a file.
std::string sha256_file(const std::filesystem::path& path);

/// Records the effective config, artifact checksums, tool version and
/// per-stage wall-clock seconds in manifest.json, merging with earlier stages.
void update_manifest(const ExperimentConfig& cfg, const std::string& stage, double seconds,
                     const std::vector<std::string>& artifacts);

/// Artifacts produced by prepare and loaded by every later stage.
struct Prepared {
  corpus::CorpusSplit split;
  corpus::Vocab vocab;
  huffman::HuffmanTable table;
  fec::LdpcCode code;
};

struct PrepareSummary {
  std::size_t retained = 0;
  std::size_t dropped = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

PrepareSummary cmd_prepare(const ExperimentConfig& cfg, std::ostream& log);
/// Reloads the corpus and applies the saved split manifests.
Prepared load_prepared(const ExperimentConfig& cfg);

enum class TrainTarget { codec, constellation };
TrainTarget parse_target(const std::string& name);

void cmd_train(const ExperimentConfig& cfg, TrainTarget target, std::ostream& log);

harq::SweepTable cmd_sweep(const ExperimentConfig& cfg, std::ostream& log);

struct ModexpRow {
  double snr_db = 0.0;
  std::string modulation;  ///< "qam16" or "trained"
  double mean_similarity = 0.0;
  double std_similarity = 0.0;
  std::size_t n = 0;
  /// One-sided p-value of the paired test "trained > qam16" (same value on both rows).
  double p_trained_better = 1.0;
  std::uint64_t seed = 0;
};

inline constexpr const char* kModexpCsvHeader = "snr_db,modulation,mean_similarity,std_similarity,n,p_trained_better,seed";

std::vector<ModexpRow> modexp(const codec::SemanticModel& qam_codec, const codec::SemanticModel& trained_codec,
                              const mod::Constellation& trained, const corpus::Vocab& vocab,
                              const std::vector<std::vector<std::string>>& sentences, const std::vector<double>& snrs,
                              const ofdm::OfdmConfig& ofdm, std::uint64_t seed, int workers);
std::string modexp_csv(const std::vector<ModexpRow>& rows);
std::vector<ModexpRow> cmd_modexp(const ExperimentConfig& cfg, std::ostream& log);

/// Paired one-sided test of mean(a - b) > 0, normal approximation.
double paired_one_sided_p(const std::vector<double>& a, const std::vector<double>& b);

struct GradcheckSummary {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  bool passed = false;
};

/// Checks the full soft codec path and the e2e mapper path on a small model.
GradcheckSummary cmd_gradcheck(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace semcom::experiment
