#include "semcom/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "semcom/errors.hpp"

namespace semcom::codec {

using nn::Activation;
using nn::Parameter;

void CodecConfig::validate() const {
  if (max_len < 1 || embed_dim < 1 || hidden < 1 || position_dim < 1)
    throw std::invalid_argument("CodecConfig: dimensions must be positive");
  if (code_bits < 1 || code_bits > kMaxCodeBits)
    throw std::invalid_argument("CodecConfig: code_bits must be in [1, 1000]");
  if (blocks < 1 || code_bits % blocks != 0) throw std::invalid_argument("CodecConfig: code_bits must divide into blocks");
  if (vocab_size < 4) throw std::invalid_argument("CodecConfig: vocab_size must be at least 4");
}

nlohmann::json CodecConfig::to_json() const {
  return {{"max_len", max_len},     {"embed_dim", embed_dim}, {"hidden", hidden},
          {"position_dim", position_dim}, {"code_bits", code_bits}, {"blocks", blocks},
          {"vocab_size", vocab_size}};
}

CodecConfig CodecConfig::from_json(const nlohmann::json& j) {
  CodecConfig c;
  c.max_len = j.value("max_len", c.max_len);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.position_dim = j.value("position_dim", c.position_dim);
  c.code_bits = j.value("code_bits", c.code_bits);
  c.blocks = j.value("blocks", c.blocks);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  return c;
}

SemanticModel::SemanticModel(const CodecConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(derive_seed(seed, hash_label("codec-init")));
  const int L = cfg.max_len;
  auto layer = [&](const std::string& name, Eigen::Index in, Eigen::Index out) {
    params_.emplace(name + ".w", Parameter(nn::glorot_uniform(in, out, rng)));
    params_.emplace(name + ".b", Parameter(Matrix::Zero(1, out)));
  };
  params_.emplace("embedding", Parameter(nn::glorot_uniform(cfg.vocab_size, cfg.embed_dim, rng)));
  layer("enc1", L * cfg.embed_dim, cfg.hidden);
  layer("enc2", cfg.hidden, cfg.code_bits);
  layer("dec1", cfg.code_bits + cfg.blocks, cfg.hidden);
  layer("dec2", cfg.hidden, L * cfg.position_dim);
  layer("out", cfg.position_dim, cfg.vocab_size);
}

std::vector<int> SemanticModel::pad(const std::vector<int>& ids) const {
  if (static_cast<int>(ids.size()) > cfg_.max_len) throw SizeError("SemanticModel: sentence longer than max_len");
  std::vector<int> out(ids);
  for (int id : out)
    if (id < 0 || id >= cfg_.vocab_size) throw std::out_of_range("SemanticModel: token id outside vocabulary");
  out.resize(static_cast<std::size_t>(cfg_.max_len), corpus::Vocab::kPad);
  return out;
}

EncoderCache SemanticModel::encoder_forward(const std::vector<std::vector<int>>& batch) const {
  const int L = cfg_.max_len, d = cfg_.embed_dim;
  const auto n = static_cast<Eigen::Index>(batch.size());
  const auto& emb = params_.at("embedding").value;
  EncoderCache c;
  c.x0.resize(n, L * d);
  c.ids.reserve(static_cast<std::size_t>(n * L));
  for (Eigen::Index b = 0; b < n; ++b) {
    const auto ids = pad(batch[static_cast<std::size_t>(b)]);
    for (int t = 0; t < L; ++t) {
      c.x0.block(b, t * d, 1, d) = emb.row(ids[static_cast<std::size_t>(t)]);
      c.ids.push_back(ids[static_cast<std::size_t>(t)]);
    }
  }
  c.h1 = nn::activation_forward(
      nn::affine_forward(c.x0, params_.at("enc1.w").value, params_.at("enc1.b").value), Activation::tanh);
  c.z = nn::activation_forward(
      nn::affine_forward(c.h1, params_.at("enc2.w").value, params_.at("enc2.b").value), Activation::tanh);
  return c;
}

void SemanticModel::encoder_backward(const EncoderCache& c, const Matrix& dz) {
  const int L = cfg_.max_len, d = cfg_.embed_dim;
  Matrix da2 = nn::activation_backward(c.z, dz, Activation::tanh);
  auto g2 = nn::affine_backward(c.h1, params_.at("enc2.w").value, da2);
  params_.at("enc2.w").grad += g2.dw;
  params_.at("enc2.b").grad += g2.db;
  Matrix da1 = nn::activation_backward(c.h1, g2.dx, Activation::tanh);
  auto g1 = nn::affine_backward(c.x0, params_.at("enc1.w").value, da1);
  params_.at("enc1.w").grad += g1.dw;
  params_.at("enc1.b").grad += g1.db;
  auto& demb = params_.at("embedding").grad;
  for (Eigen::Index b = 0; b < c.x0.rows(); ++b)
    for (int t = 0; t < L; ++t) demb.row(c.ids[static_cast<std::size_t>(b * L + t)]) += g1.dx.block(b, t * d, 1, d);
}

DecoderCache SemanticModel::decoder_forward(const Matrix& received, const Matrix& mask) const {
  const int L = cfg_.max_len, e = cfg_.position_dim;
  if (received.cols() != cfg_.code_bits || mask.cols() != cfg_.blocks || received.rows() != mask.rows())
    throw std::invalid_argument("decoder_forward: input shape mismatch");
  const auto n = received.rows();
  DecoderCache c;
  c.d0.resize(n, cfg_.code_bits + cfg_.blocks);
  c.d0 << received, mask;
  c.g1 = nn::activation_forward(
      nn::affine_forward(c.d0, params_.at("dec1.w").value, params_.at("dec1.b").value), Activation::tanh);
  c.g2 = nn::activation_forward(
      nn::affine_forward(c.g1, params_.at("dec2.w").value, params_.at("dec2.b").value), Activation::tanh);
  c.positions.resize(n * L, e);
  for (Eigen::Index b = 0; b < n; ++b)
    for (int t = 0; t < L; ++t) c.positions.row(b * L + t) = c.g2.block(b, t * e, 1, e);
  c.logits = nn::affine_forward(c.positions, params_.at("out.w").value, params_.at("out.b").value);
  return c;
}

Matrix SemanticModel::decoder_backward(const DecoderCache& c, const Matrix& dlogits) {
  const int L = cfg_.max_len, e = cfg_.position_dim;
  const auto n = c.g2.rows();
  auto go = nn::affine_backward(c.positions, params_.at("out.w").value, dlogits);
  params_.at("out.w").grad += go.dw;
  params_.at("out.b").grad += go.db;
  Matrix dg2(n, L * e);
  for (Eigen::Index b = 0; b < n; ++b)
    for (int t = 0; t < L; ++t) dg2.block(b, t * e, 1, e) = go.dx.row(b * L + t);
  Matrix da2 = nn::activation_backward(c.g2, dg2, Activation::tanh);
  auto g2 = nn::affine_backward(c.g1, params_.at("dec2.w").value, da2);
  params_.at("dec2.w").grad += g2.dw;
  params_.at("dec2.b").grad += g2.db;
  Matrix da1 = nn::activation_backward(c.g1, g2.dx, Activation::tanh);
  auto g1 = nn::affine_backward(c.d0, params_.at("dec1.w").value, da1);
  params_.at("dec1.w").grad += g1.dw;
  params_.at("dec1.b").grad += g1.db;
  return g1.dx.leftCols(cfg_.code_bits);
}

nn::Checkpoint SemanticModel::to_checkpoint() const {
  return nn::make_checkpoint(params_, {{"kind", "semantic_codec"}, {"codec", cfg_.to_json()}});
}

SemanticModel SemanticModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.config.value("kind", "") != "semantic_codec")
    throw std::invalid_argument("checkpoint does not hold a semantic codec");
  SemanticModel m(CodecConfig::from_json(ckpt.config.at("codec")), 0);
  nn::restore(m.params_, ckpt);
  return m;
}

std::vector<CodewordBlock> encode_semantic(const SemanticModel& model, const std::vector<int>& token_ids) {
  const auto& cfg = model.config();
  const auto cache = model.encoder_forward({token_ids});
  std::vector<CodewordBlock> blocks;
  const int per = cfg.block_bits();
  for (int k = 0; k < cfg.blocks; ++k) {
    CodewordBlock blk{k + 1, BitVector(static_cast<std::size_t>(per))};
    for (int i = 0; i < per; ++i) blk.bits.set(static_cast<std::size_t>(i), cache.z(0, k * per + i) >= 0.0);
    blocks.push_back(std::move(blk));
  }
  return blocks;
}

void blocks_to_input(const CodecConfig& cfg, std::span<const CodewordBlock> blocks, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> received,
                     Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> mask) {
  received.setZero();
  mask.setZero();
  const int per = cfg.block_bits();
  for (const auto& blk : blocks) {
    if (blk.index < 1 || blk.index > cfg.blocks) throw std::invalid_argument("decode_semantic: block index out of range");
    if (static_cast<int>(blk.bits.size()) != per) throw std::invalid_argument("decode_semantic: wrong block length");
    if (mask(blk.index - 1) != 0.0) throw std::invalid_argument("decode_semantic: duplicate block index");
    mask(blk.index - 1) = 1.0;
    for (int i = 0; i < per; ++i) received((blk.index - 1) * per + i) = blk.bits[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
  }
}

DecodedSentence read_logits(const Matrix& logits, Eigen::Index first_row, int max_len) {
  DecodedSentence out;
  for (int t = 0; t < max_len; ++t) {
    const Eigen::RowVectorXd row = logits.row(first_row + t);
    Eigen::Index best = 0;
    const double top = row.maxCoeff(&best);
    if (best == corpus::Vocab::kPad || best == corpus::Vocab::kEos) break;
    const double z = (row.array() - top).exp().sum();
    out.ids.push_back(static_cast<int>(best));
    out.confidence.push_back(1.0 / z);
  }
  return out;
}

DecodedSentence decode_semantic(const SemanticModel& model, std::span<const CodewordBlock> blocks) {
  if (blocks.empty()) throw std::invalid_argument("decode_semantic: at least one block is required");
  const auto& cfg = model.config();
  Matrix received(1, cfg.code_bits), mask(1, cfg.blocks);
  blocks_to_input(cfg, blocks, received.row(0), mask.row(0));
  const auto cache = model.decoder_forward(received, mask);
  return read_logits(cache.logits, 0, cfg.max_len);
}

BatchChannel clean_channel(const CodecConfig& cfg, int batch) {
  return {Matrix::Ones(batch, cfg.code_bits), Matrix::Ones(batch, cfg.blocks)};
}

BatchChannel sample_channel(const CodecConfig& cfg, int batch, double flip_prob, double keep_prob, Rng& rng) {
  BatchChannel ch = clean_channel(cfg, batch);
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < cfg.code_bits; ++i)
      if (nn::uniform01(rng) < flip_prob) ch.flip_sign(b, i) = -1.0;
    int kept = 0;
    for (int k = 0; k < cfg.blocks; ++k) {
      const bool keep = nn::uniform01(rng) < keep_prob;
      ch.mask(b, k) = keep ? 1.0 : 0.0;
      kept += keep;
    }
    if (kept == 0) ch.mask(b, static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(cfg.blocks))) = 1.0;
  }
  return ch;
}

double codec_loss(SemanticModel& model, const std::vector<std::vector<int>>& batch, const BatchChannel& channel,
                  Quantizer quantizer, bool backward) {
  const auto& cfg = model.config();
  const int per = cfg.block_bits();
  const auto n = static_cast<Eigen::Index>(batch.size());
  const auto enc = model.encoder_forward(batch);

  Matrix q = quantizer == Quantizer::hard
                 ? Matrix(enc.z.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; }))
                 : enc.z;
  Matrix gate(n, cfg.code_bits);  // d(received)/d(q)
  for (Eigen::Index b = 0; b < n; ++b)
    for (int k = 0; k < cfg.blocks; ++k)
      gate.block(b, k * per, 1, per) = channel.flip_sign.block(b, k * per, 1, per) * channel.mask(b, k);
  const Matrix received = q.cwiseProduct(gate);

  const auto dec = model.decoder_forward(received, channel.mask);
  const double rows = static_cast<double>(enc.ids.size());
  const auto ce = nn::softmax_cross_entropy_rows(dec.logits, enc.ids, 1.0 / rows);
  if (backward) {
    Matrix drec = model.decoder_backward(dec, ce.grad);
    Matrix dq = drec.cwiseProduct(gate);
    if (quantizer == Quantizer::hard) dq = dq.cwiseProduct((enc.z.array().abs() <= 1.0).cast<double>().matrix());
    model.encoder_backward(enc, dq);
  }
  return ce.loss / rows;
}

TrainResult train_codec(const std::vector<std::vector<int>>& train_ids, const CodecConfig& cfg,
                        const TrainOptions& opts) {
  if (train_ids.empty()) throw std::invalid_argument("train_codec: empty training split");
  auto hold_n = static_cast<std::size_t>(std::floor(opts.holdout_fraction * static_cast<double>(train_ids.size())));
  if (opts.holdout_fraction <= 0.0 || train_ids.size() < 2) hold_n = 0;
  else hold_n = std::clamp<std::size_t>(hold_n, 1, train_ids.size() - 1);
  const std::vector<std::vector<int>> fit(train_ids.begin(), train_ids.end() - static_cast<std::ptrdiff_t>(hold_n));
  const std::vector<std::vector<int>> hold(train_ids.end() - static_cast<std::ptrdiff_t>(hold_n), train_ids.end());

  TrainResult result{SemanticModel(cfg, opts.seed), {}, {}, 0};
  SemanticModel& model = result.model;
  nn::ParameterMap best = model.params();
  double best_loss = std::numeric_limits<double>::infinity();
  nn::Adam adam;
  adam.learning_rate = opts.learning_rate;
  Rng rng(derive_seed(opts.seed, hash_label("codec-train")));

  // hold-out channel realizations are fixed for the whole run
  const int hold_batches = static_cast<int>((hold.size() + static_cast<std::size_t>(opts.batch_size) - 1) /
                                            static_cast<std::size_t>(opts.batch_size));
  std::vector<BatchChannel> hold_channels;
  {
    Rng hold_rng(derive_seed(opts.seed, hash_label("codec-holdout")));
    for (int hb = 0; hb < hold_batches; ++hb) {
      const auto sz = std::min<std::size_t>(static_cast<std::size_t>(opts.batch_size),
                                            hold.size() - static_cast<std::size_t>(hb) * static_cast<std::size_t>(opts.batch_size));
      const double p = opts.flip_low + (opts.flip_high - opts.flip_low) * nn::uniform01(hold_rng);
      hold_channels.push_back(sample_channel(cfg, static_cast<int>(sz), p, opts.keep_prob, hold_rng));
    }
  }

  std::vector<std::vector<int>> batch;
  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    const auto order = corpus::seeded_permutation(fit.size(), derive_seed(opts.seed, epoch));
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opts.batch_size)) {
      const auto stop = std::min(order.size(), start + static_cast<std::size_t>(opts.batch_size));
      batch.clear();
      for (auto i = start; i < stop; ++i) batch.push_back(fit[order[i]]);
      const double p = opts.flip_low + (opts.flip_high - opts.flip_low) * nn::uniform01(rng);
      const auto ch = sample_channel(cfg, static_cast<int>(batch.size()), p, opts.keep_prob, rng);
      nn::zero_grad(model.params());
      const double loss = codec_loss(model, batch, ch, Quantizer::hard, true);
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "train_codec: non-finite loss at epoch " << epoch << " batch " << start / opts.batch_size;
        throw DivergenceError(os.str());
      }
      adam.step(model.params());
      sum += loss * static_cast<double>(batch.size());
      count += batch.size();
    }
    const double train_loss = sum / static_cast<double>(count);

    double hold_loss = train_loss;
    if (!hold.empty()) {
      double hs = 0.0;
      for (int hb = 0; hb < hold_batches; ++hb) {
        const auto b0 = static_cast<std::size_t>(hb) * static_cast<std::size_t>(opts.batch_size);
        const auto b1 = std::min(hold.size(), b0 + static_cast<std::size_t>(opts.batch_size));
        batch.assign(hold.begin() + static_cast<std::ptrdiff_t>(b0), hold.begin() + static_cast<std::ptrdiff_t>(b1));
        hs += codec_loss(model, batch, hold_channels[static_cast<std::size_t>(hb)], Quantizer::hard, false) *
              static_cast<double>(batch.size());
      }
      hold_loss = hs / static_cast<double>(hold.size());
    }
    result.train_loss.push_back(train_loss);
    result.holdout_loss.push_back(hold_loss);
    if (opts.on_epoch) opts.on_epoch(epoch, train_loss, hold_loss);
    if (hold_loss < best_loss) {
      best_loss = hold_loss;
      best = model.params();
      result.best_epoch = epoch;
    }
  }
  model.params() = best;
  return result;
}

}  // namespace semcom::codec
