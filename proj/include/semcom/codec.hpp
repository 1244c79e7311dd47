#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "json.hpp"
#include "semcom/bitvector.hpp"
#include "semcom/corpus.hpp"
#include "semcom/nn.hpp"

namespace semcom::codec {

using nn::Matrix;

struct CodecConfig {
  int max_len = 30;
  int embed_dim = 32;
  int hidden = 256;
  int position_dim = 32;  ///< per-position feature width ahead of the shared output projection
  int code_bits = 960;
  int blocks = 6;
  int vocab_size = 0;

  int block_bits() const { return code_bits / blocks; }
  /// Throws std::invalid_argument on inconsistent fields.
  void validate() const;

  nlohmann::json to_json() const;
  static CodecConfig from_json(const nlohmann::json& j);
};

inline constexpr int kMaxCodeBits = 1000;

struct CodewordBlock {
  int index = 0;  ///< 1-based
  BitVector bits;
};

struct EncoderCache {
  Matrix x0, h1, z;  ///< z is the pre-quantization output in (-1, 1)
  std::vector<int> ids;  ///< flattened (sample, position) token ids
};

struct DecoderCache {
  Matrix d0, g1, g2, positions, logits;
};

/// Embedding + two affine/tanh encoder layers producing `code_bits` reals;
/// decoder maps (received bits in {-1, 0, +1}, block-presence flags) through
/// two affine/tanh layers to per-position features, then a shared affine
/// projection to vocabulary logits.
class SemanticModel {
 public:
  SemanticModel() = default;
  SemanticModel(const CodecConfig& cfg, std::uint64_t seed);

  const CodecConfig& config() const noexcept { return cfg_; }
  nn::ParameterMap& params() noexcept { return params_; }
  const nn::ParameterMap& params() const noexcept { return params_; }
  const Matrix& embedding() const { return params_.at("embedding").value; }

  /// Pads/validates a token-id sentence to max_len ids.
  std::vector<int> pad(const std::vector<int>& ids) const;

  EncoderCache encoder_forward(const std::vector<std::vector<int>>& batch) const;
  /// Accumulates parameter gradients from d(loss)/dz.
  void encoder_backward(const EncoderCache& cache, const Matrix& dz);

  /// received: batch x code_bits, mask: batch x blocks.
  DecoderCache decoder_forward(const Matrix& received, const Matrix& mask) const;
  /// Accumulates parameter gradients; returns d(loss)/d(received).
  Matrix decoder_backward(const DecoderCache& cache, const Matrix& dlogits);

  nn::Checkpoint to_checkpoint() const;
  static SemanticModel from_checkpoint(const nn::Checkpoint& ckpt);

 private:
  CodecConfig cfg_;
  nn::ParameterMap params_;
};

/// Hard bits from the encoder sign: negative -> 0, otherwise 1.
std::vector<CodewordBlock> encode_semantic(const SemanticModel& model, const std::vector<int>& token_ids);

struct DecodedSentence {
  std::vector<int> ids;             ///< truncated at the first EOS/PAD
  std::vector<double> confidence;   ///< softmax maximum per kept position
};

/// Missing blocks contribute zeros and a cleared presence flag. Throws
/// std::invalid_argument for an empty block list or malformed blocks.
DecodedSentence decode_semantic(const SemanticModel& model, std::span<const CodewordBlock> blocks);

/// Channel-input matrix row (+1/-1 per received bit, 0 when missing) and mask row.
void blocks_to_input(const CodecConfig& cfg, std::span<const CodewordBlock> blocks, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> received,
                     Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> mask);

/// Greedy per-position decisions from logits rows (max_len rows per sentence).
DecodedSentence read_logits(const Matrix& logits, Eigen::Index first_row, int max_len);

struct TrainOptions {
  int epochs = 20;
  int batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  double flip_low = 0.0;
  double flip_high = 0.15;
  double keep_prob = 0.7;
  double holdout_fraction = 0.05;
  /// Receives (epoch, train_loss, holdout_loss) after each epoch.
  std::function<void(int, double, double)> on_epoch;
};

struct TrainResult {
  SemanticModel model;
  std::vector<double> train_loss;
  std::vector<double> holdout_loss;
  int best_epoch = 0;
};

/// Per-batch flip probability ~ U[flip_low, flip_high], blocks kept with
/// keep_prob (at least one), straight-through quantizer; the returned model
/// is the epoch snapshot with the lowest hold-out loss. The hold-out set is
/// the tail of the training split. Throws DivergenceError on a NaN loss.
TrainResult train_codec(const std::vector<std::vector<int>>& train_ids, const CodecConfig& cfg, const TrainOptions& opts);

/// Loss under explicit channel corruption, used by training and tests.
struct BatchChannel {
  Matrix flip_sign;  ///< batch x code_bits, entries +1 or -1
  Matrix mask;       ///< batch x blocks, entries 0 or 1
};

enum class Quantizer { hard, soft };

/// Mean per-position cross-entropy for a batch. With `backward`, parameter
/// gradients are accumulated (straight-through for the hard quantizer,
/// exact for the soft identity quantizer).
double codec_loss(SemanticModel& model, const std::vector<std::vector<int>>& batch, const BatchChannel& channel,
                  Quantizer quantizer, bool backward);

BatchChannel sample_channel(const CodecConfig& cfg, int batch, double flip_prob, double keep_prob, Rng& rng);
BatchChannel clean_channel(const CodecConfig& cfg, int batch);

}  // namespace semcom::codec
