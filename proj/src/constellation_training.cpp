#include "semcom/constellation_training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "semcom/errors.hpp"

namespace semcom::mod {

using Points = Eigen::Matrix<double, kPoints, 2>;

Mapper::Mapper(std::uint64_t seed) {
  Rng rng(derive_seed(seed, hash_label("mapper-init")));
  params_.emplace("mapper.w", nn::Parameter(nn::glorot_uniform(kPoints, 2, rng)));
  params_.emplace("mapper.b", nn::Parameter(nn::Matrix::Zero(1, 2)));
}

Mapper::Mapper(const Constellation& init) {
  if (std::abs(init.average_power() - 1.0) > 1e-9) throw std::invalid_argument("Mapper: initial constellation must have unit power");
  nn::Matrix w(kPoints, 2);
  const Points p = init.as_matrix();
  // half-scale keeps every coordinate well inside the tanh range
  for (int i = 0; i < kPoints; ++i)
    for (int c = 0; c < 2; ++c) w(i, c) = std::atanh(0.5 * p(i, c));
  params_.emplace("mapper.w", nn::Parameter(w));
  params_.emplace("mapper.b", nn::Parameter(nn::Matrix::Zero(1, 2)));
}

Points Mapper::raw() const {
  const auto& w = params_.at("mapper.w").value;
  const auto& b = params_.at("mapper.b").value;
  Points r;
  for (int i = 0; i < kPoints; ++i)
    for (int c = 0; c < 2; ++c) r(i, c) = std::tanh(w(i, c) + b(0, c));
  return r;
}

Constellation Mapper::constellation() const {
  const Points r = raw();
  const double s = std::sqrt(r.squaredNorm() / kPoints);
  return Constellation::from_matrix(r / s);
}

void Mapper::backward(const Points& dpoints) {
  const Points r = raw();
  const double s2 = r.squaredNorm() / kPoints;
  const double s = std::sqrt(s2);
  const double dot = dpoints.cwiseProduct(r).sum();
  const Points draw = dpoints / s - r * (dot / (kPoints * s2 * s));
  const Points da = draw.cwiseProduct((1.0 - r.array().square()).matrix());
  params_.at("mapper.w").grad += da;
  params_.at("mapper.b").grad += da.colwise().sum();
}

NoiseMatrix sample_noise(Eigen::Index rows, Eigen::Index symbols, double noise_var, Rng& rng) {
  NoiseMatrix n(rows, symbols);
  const double sd = std::sqrt(noise_var / 2.0);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < symbols; ++c) {
      const double re = nn::standard_normal(rng);
      n(r, c) = Complex(sd * re, sd * nn::standard_normal(rng));
    }
  return n;
}

namespace {

// +1 where label bit k is 1
constexpr double label_sign(int label, int k) { return label_bit(label, k) ? 1.0 : -1.0; }

void check_symbol_shape(const codec::CodecConfig& cfg) {
  if (cfg.code_bits % kBitsPerSymbol != 0) throw std::invalid_argument("e2e: code_bits must be a multiple of 4");
  if (cfg.blocks != 1) throw std::invalid_argument("e2e: the modulation experiment uses a single codeword block");
}

}  // namespace

double e2e_loss(Mapper& mapper, codec::SemanticModel& model, const std::vector<std::vector<int>>& batch,
                const NoiseMatrix& noise, double noise_var, codec::Quantizer quantizer, bool backward,
                bool update_codec) {
  const auto& cfg = model.config();
  check_symbol_shape(cfg);
  const int symbols = cfg.code_bits / kBitsPerSymbol;
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (noise.rows() != n || noise.cols() != symbols) throw std::invalid_argument("e2e_loss: noise shape mismatch");

  const auto enc = model.encoder_forward(batch);
  const nn::Matrix q = quantizer == codec::Quantizer::hard
                           ? nn::Matrix(enc.z.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; }))
                           : enc.z;
  const Constellation con = mapper.constellation();
  const Points pts = con.as_matrix();

  // per symbol: label weights o, received y, posterior
  std::vector<std::array<double, kPoints>> weights(static_cast<std::size_t>(n * symbols));
  std::vector<std::array<double, kPoints>> post(weights.size());
  std::vector<Complex> ys(weights.size());
  nn::Matrix expected(n, cfg.code_bits);
  for (Eigen::Index b = 0; b < n; ++b) {
    for (int s = 0; s < symbols; ++s) {
      const auto idx = static_cast<std::size_t>(b * symbols + s);
      auto& o = weights[idx];
      Complex x(0.0, 0.0);
      for (int i = 0; i < kPoints; ++i) {
        double w = 1.0;
        for (int k = 0; k < kBitsPerSymbol; ++k) w *= 0.5 * (1.0 + label_sign(i, k) * q(b, s * kBitsPerSymbol + k));
        o[static_cast<std::size_t>(i)] = w;
        x += w * con.point(i);
      }
      ys[idx] = x + noise(b, s);
      post[idx] = soft_detect(ys[idx], con, noise_var);
      for (int k = 0; k < kBitsPerSymbol; ++k) {
        double e = 0.0;
        for (int i = 0; i < kPoints; ++i) e += post[idx][static_cast<std::size_t>(i)] * label_sign(i, k);
        expected(b, s * kBitsPerSymbol + k) = e;
      }
    }
  }

  const nn::Matrix mask = nn::Matrix::Ones(n, 1);
  const auto dec = model.decoder_forward(expected, mask);
  const double rows = static_cast<double>(enc.ids.size());
  const auto ce = nn::softmax_cross_entropy_rows(dec.logits, enc.ids, 1.0 / rows);
  if (!backward) return ce.loss / rows;

  // decoder gradients are only kept in joint mode
  nn::ParameterMap saved;
  if (!update_codec) saved = model.params();
  const nn::Matrix de = model.decoder_backward(dec, ce.grad);
  Points dpoints = Points::Zero();
  nn::Matrix dq(n, cfg.code_bits);
  for (Eigen::Index b = 0; b < n; ++b) {
    for (int s = 0; s < symbols; ++s) {
      const auto idx = static_cast<std::size_t>(b * symbols + s);
      std::array<double, kPoints> dpost{};
      for (int i = 0; i < kPoints; ++i) {
        double v = 0.0;
        for (int k = 0; k < kBitsPerSymbol; ++k) v += de(b, s * kBitsPerSymbol + k) * label_sign(i, k);
        dpost[static_cast<std::size_t>(i)] = v;
      }
      const auto g = soft_detect_backward(ys[idx], pts, noise_var, post[idx], dpost);
      dpoints += g.dpoints;
      const auto& o = weights[idx];
      std::array<double, kPoints> dout{};
      for (int i = 0; i < kPoints; ++i) {
        dpoints(i, 0) += o[static_cast<std::size_t>(i)] * g.dy.real();
        dpoints(i, 1) += o[static_cast<std::size_t>(i)] * g.dy.imag();
        dout[static_cast<std::size_t>(i)] = g.dy.real() * pts(i, 0) + g.dy.imag() * pts(i, 1);
      }
      for (int k = 0; k < kBitsPerSymbol; ++k) {
        double acc = 0.0;
        for (int i = 0; i < kPoints; ++i) {
          double w = 0.5 * label_sign(i, k);
          for (int j = 0; j < kBitsPerSymbol; ++j)
            if (j != k) w *= 0.5 * (1.0 + label_sign(i, j) * q(b, s * kBitsPerSymbol + j));
          acc += dout[static_cast<std::size_t>(i)] * w;
        }
        dq(b, s * kBitsPerSymbol + k) = acc;
      }
    }
  }
  mapper.backward(dpoints);
  if (update_codec) {
    model.encoder_backward(enc, dq);
  } else {
    model.params() = std::move(saved);
  }
  return ce.loss / rows;
}

ConstellationTrainResult train_constellation(const codec::SemanticModel& model,
                                             const std::vector<std::vector<int>>& train_ids,
                                             const ConstellationTrainOptions& opts) {
  check_symbol_shape(model.config());
  if (train_ids.empty()) throw std::invalid_argument("train_constellation: empty training split");
  if (opts.epochs < 1 || opts.batch_size < 1) throw std::invalid_argument("train_constellation: bad schedule");
  const double noise_var = std::pow(10.0, -opts.snr_train_db / 10.0);
  const int symbols = model.config().code_bits / kBitsPerSymbol;

  ConstellationTrainResult result;
  result.model = model;
  Mapper mapper = opts.init_qam ? Mapper(qam16_gray()) : Mapper(opts.seed);
  nn::Adam adam_mapper, adam_codec;
  adam_mapper.learning_rate = opts.learning_rate;
  adam_codec.learning_rate = opts.codec_learning_rate;

  // fixed probe set and noise for the logged losses
  const std::size_t probe_n = std::min<std::size_t>(train_ids.size(), 1024);
  const std::vector<std::vector<int>> probe(train_ids.begin(), train_ids.begin() + static_cast<std::ptrdiff_t>(probe_n));
  Rng probe_rng(derive_seed(opts.seed, hash_label("mapper-probe")));
  const NoiseMatrix probe_noise = sample_noise(static_cast<Eigen::Index>(probe_n), symbols, noise_var, probe_rng);
  auto probe_loss = [&]() {
    double total = 0.0;
    for (std::size_t b0 = 0; b0 < probe_n; b0 += 256) {
      const auto b1 = std::min(probe_n, b0 + 256);
      const std::vector<std::vector<int>> chunk(probe.begin() + static_cast<std::ptrdiff_t>(b0),
                                                probe.begin() + static_cast<std::ptrdiff_t>(b1));
      const NoiseMatrix nz = probe_noise.middleRows(static_cast<Eigen::Index>(b0), static_cast<Eigen::Index>(b1 - b0));
      total += e2e_loss(mapper, result.model, chunk, nz, noise_var, codec::Quantizer::hard, false, false) *
               static_cast<double>(b1 - b0);
    }
    return total / static_cast<double>(probe_n);
  };
  result.initial_loss = probe_loss();

  Rng rng(derive_seed(opts.seed, hash_label("mapper-train")));
  std::vector<std::vector<int>> batch;
  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    const auto order = corpus::seeded_permutation(train_ids.size(), derive_seed(opts.seed, hash_label("mapper-epoch"), epoch));
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opts.batch_size)) {
      const auto stop = std::min(order.size(), start + static_cast<std::size_t>(opts.batch_size));
      batch.clear();
      for (auto i = start; i < stop; ++i) batch.push_back(train_ids[order[i]]);
      const auto noise = sample_noise(static_cast<Eigen::Index>(batch.size()), symbols, noise_var, rng);
      nn::zero_grad(mapper.params());
      nn::zero_grad(result.model.params());
      const double loss =
          e2e_loss(mapper, result.model, batch, noise, noise_var, codec::Quantizer::hard, true, opts.joint);
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "train_constellation: non-finite loss at epoch " << epoch << " step " << result.steps;
        throw DivergenceError(os.str());
      }
      adam_mapper.step(mapper.params());
      if (opts.joint) adam_codec.step(result.model.params());
      ++result.steps;
      result.max_power_error =
          std::max(result.max_power_error, std::abs(mapper.constellation().average_power() - 1.0));
    }
    result.epoch_loss.push_back(probe_loss());
    if (opts.on_epoch) opts.on_epoch(epoch, result.epoch_loss.back(), result.max_power_error);
  }
  result.constellation = mapper.constellation();
  return result;
}

}  // namespace semcom::mod
