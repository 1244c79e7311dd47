#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "semcom/codec.hpp"
#include "semcom/modulation.hpp"
#include "semcom/nn.hpp"

namespace semcom::mod {

/// Dense layer from a 16-wide one-hot to (I, Q) with tanh, then scaled to
/// unit average power. Parameters "mapper.w" (16 x 2) and "mapper.b" (1 x 2).
class Mapper {
 public:
  /// Random Glorot weights.
  explicit Mapper(std::uint64_t seed);
  /// Weights chosen so that the normalized output equals `init` exactly.
  explicit Mapper(const Constellation& init);

  nn::ParameterMap& params() noexcept { return params_; }
  const nn::ParameterMap& params() const noexcept { return params_; }

  /// Pre-normalization tanh outputs, 16 x 2.
  Eigen::Matrix<double, kPoints, 2> raw() const;
  Constellation constellation() const;
  /// Accumulates parameter gradients from d(loss)/d(normalized points).
  void backward(const Eigen::Matrix<double, kPoints, 2>& dpoints);

 private:
  nn::ParameterMap params_;
};

/// Complex noise for one batch: rows = sentences, columns = symbols.
using NoiseMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

NoiseMatrix sample_noise(Eigen::Index rows, Eigen::Index symbols, double noise_var, Rng& rng);

/// sentence -> codec bits -> nibbles -> mapper points -> + noise -> soft
/// detection -> expected bits -> decoder -> mean token cross-entropy.
/// The hard quantizer uses a multilinear label weighting so that the
/// straight-through gradient reaches the codeword; the soft quantizer makes
/// the whole path exactly differentiable. With `backward`, mapper gradients
/// are accumulated and, if `update_codec`, codec gradients too.
double e2e_loss(Mapper& mapper, codec::SemanticModel& model, const std::vector<std::vector<int>>& batch,
                const NoiseMatrix& noise, double noise_var, codec::Quantizer quantizer, bool backward,
                bool update_codec);

struct ConstellationTrainOptions {
  double snr_train_db = 8.0;
  int epochs = 5;
  int batch_size = 64;
  double learning_rate = 1e-3;
  /// Learning rate of the codec in joint mode.
  double codec_learning_rate = 2e-4;
  bool joint = true;
  /// Start from Gray 16-QAM rather than random weights.
  bool init_qam = true;
  std::uint64_t seed = 1;
  /// Receives (epoch, probe loss, worst power error so far).
  std::function<void(int, double, double)> on_epoch;
};

struct ConstellationTrainResult {
  Constellation constellation;
  codec::SemanticModel model;  ///< the codec after training (unchanged unless joint)
  double initial_loss = 0.0;   ///< epoch-0 loss over the training sentences
  std::vector<double> epoch_loss;
  double max_power_error = 0.0;  ///< worst |average power - 1| seen after any step
  long steps = 0;
};

/// Throws std::invalid_argument unless each sentence maps to whole symbols,
/// DivergenceError on a non-finite loss.
ConstellationTrainResult train_constellation(const codec::SemanticModel& model,
                                             const std::vector<std::vector<int>>& train_ids,
                                             const ConstellationTrainOptions& opts);

}  // namespace semcom::mod
