#include <gtest/gtest.h>

#include <bit>
#include <cmath>

#include "semcom/constellation_training.hpp"
#include "semcom/modulation.hpp"
#include "semcom/nn.hpp"
#include "semcom/ofdm.hpp"

using namespace semcom;
using namespace semcom::mod;

namespace {

Complex noisy(Complex s, double nv, Rng& rng) { return s + ofdm::complex_gaussian(rng, nv); }

int brute_nearest(Complex y, const Constellation& c) {
  int best = 0;
  for (int i = 1; i < kPoints; ++i)
    if (std::norm(y - c.point(i)) < std::norm(y - c.point(best))) best = i;
  return best;
}

}  // namespace

TEST(Qam16, LabelingTable) {
  // first two bits -> I, last two -> Q, with 00:-3 01:-1 11:+1 10:+3
  const double level[4] = {-3.0, -1.0, 3.0, 1.0};  // indexed by the bit pair value
  const double s = 1.0 / std::sqrt(10.0);
  for (int label = 0; label < 16; ++label) {
    const Complex expected(level[label >> 2] * s, level[label & 3] * s);
    EXPECT_NEAR(std::abs(qam16_gray().point(label) - expected), 0.0, 1e-15) << label;
  }
  EXPECT_NEAR(std::abs(qam16_gray().point(0) - Complex(-3.0, -3.0) * s), 0.0, 1e-15);
}

TEST(Qam16, UnitPowerAndGrayNeighbours) {
  const auto& c = qam16_gray();
  EXPECT_NEAR(c.average_power(), 1.0, 1e-12);
  const double dmin = 2.0 / std::sqrt(10.0);
  int pairs = 0;
  for (int a = 0; a < 16; ++a)
    for (int b = a + 1; b < 16; ++b)
      if (std::abs(std::abs(c.point(a) - c.point(b)) - dmin) < 1e-9) {
        EXPECT_EQ(std::popcount(static_cast<unsigned>(a ^ b)), 1) << a << " " << b;
        ++pairs;
      }
  EXPECT_EQ(pairs, 24);
}

TEST(Modulate, PadsToWholeSymbols) {
  const auto m = qam16_modulate(BitVector{1, 0, 1, 1, 0, 1});
  EXPECT_EQ(m.symbols.size(), 2u);
  EXPECT_EQ(m.pad_bits, 2);
  EXPECT_EQ(m.symbols[0], qam16_gray().point(0b1011));
  EXPECT_EQ(m.symbols[1], qam16_gray().point(0b0100));
  EXPECT_EQ(modulate_learned(BitVector(320), qam16_gray()).symbols.size(), 80u);
}

TEST(DemodSoft, NoiselessSignsReproduceLabels) {
  const auto& c = qam16_gray();
  for (int label = 0; label < 16; ++label) {
    const std::vector<Complex> y{c.point(label)};
    const auto llr = demod_soft(y, c, 0.1);
    for (int k = 0; k < 4; ++k) EXPECT_EQ(llr[static_cast<std::size_t>(k)] < 0.0, label_bit(label, k) == 1);
  }
}

TEST(DemodSoft, ScalesWithInverseNoiseVariance) {
  const std::vector<Complex> y{Complex(0.3, -0.7)};
  const auto a = demod_soft(y, qam16_gray(), 0.5);
  const auto b = demod_soft(y, qam16_gray(), 0.25);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(b[static_cast<std::size_t>(k)], 2.0 * a[static_cast<std::size_t>(k)], 1e-12);
}

TEST(DemodSoft, ZeroGainIsErasure) {
  const std::vector<Complex> y{Complex(0.3, 0.1)};
  const std::vector<double> g{0.0}, nv{0.1};
  for (double v : demod_soft(y, qam16_gray(), g, nv)) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(demod_soft(y, qam16_gray(), -1.0), std::invalid_argument);
}

TEST(DemodSoft, HardDecisionsMatchBruteForce) {
  Rng rng(1);
  for (const Constellation* c : {&qam16_gray()}) {
    std::vector<Complex> ys;
    std::vector<int> truth;
    for (int i = 0; i < 10000; ++i) {
      const Complex y = noisy(c->point(static_cast<int>(rng() % 16)), 0.2, rng);
      ys.push_back(y);
      truth.push_back(brute_nearest(y, *c));
    }
    const auto hard = hard_decisions(demod_soft(ys, *c, 0.2));
    for (std::size_t i = 0; i < ys.size(); ++i) {
      int label = 0;
      for (int k = 0; k < 4; ++k) label = (label << 1) | hard[i * 4 + static_cast<std::size_t>(k)];
      ASSERT_EQ(label, truth[i]) << i;
      ASSERT_EQ(nearest_label(ys[i], *c), truth[i]);
    }
  }
}

TEST(DemodSoft, LearnedGeometryMatchesBruteForce) {
  Mapper m(5);
  const auto c = m.constellation();
  Rng rng(2);
  std::vector<Complex> ys;
  for (int i = 0; i < 2000; ++i) ys.push_back(noisy(c.point(static_cast<int>(rng() % 16)), 0.1, rng));
  const auto hard = hard_decisions(demod_soft(ys, c, 0.1));
  for (std::size_t i = 0; i < ys.size(); ++i) {
    int label = 0;
    for (int k = 0; k < 4; ++k) label = (label << 1) | hard[i * 4 + static_cast<std::size_t>(k)];
    ASSERT_EQ(label, brute_nearest(ys[i], c));
  }
}

TEST(SoftDetect, NormalizedAndPeaked) {
  const auto& c = qam16_gray();
  const auto p = soft_detect(Complex(0.1, 0.4), c, 0.3);
  double sum = 0.0;
  for (double v : p) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  for (int label = 0; label < 16; ++label) EXPECT_GT(soft_detect(c.point(label), c, 1e-3)[static_cast<std::size_t>(label)], 0.99);
  EXPECT_THROW(soft_detect(Complex(0, 0), c, 0.0), std::invalid_argument);
}

TEST(SoftDetect, BackwardMatchesFiniteDifferences) {
  Rng rng(3);
  Eigen::Matrix<double, kPoints, 2> pts = qam16_gray().as_matrix();
  Complex y(0.2, -0.35);
  const double nv = 0.4;
  std::array<double, kPoints> w{};
  for (auto& v : w) v = nn::standard_normal(rng);
  auto f = [&](const Eigen::Matrix<double, kPoints, 2>& p, Complex yy) {
    const auto post = soft_detect(yy, Constellation::from_matrix(p), nv);
    double s = 0.0;
    for (int i = 0; i < kPoints; ++i) s += w[static_cast<std::size_t>(i)] * post[static_cast<std::size_t>(i)];
    return s;
  };
  const auto post = soft_detect(y, Constellation::from_matrix(pts), nv);
  const auto g = soft_detect_backward(y, pts, nv, post, w);
  const double h = 1e-6;
  auto rel = [](double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); };
  double worst = 0.0;
  for (int i = 0; i < kPoints; ++i)
    for (int c = 0; c < 2; ++c) {
      auto up = pts, dn = pts;
      up(i, c) += h;
      dn(i, c) -= h;
      worst = std::max(worst, rel(g.dpoints(i, c), (f(up, y) - f(dn, y)) / (2 * h)));
    }
  worst = std::max(worst, rel(g.dy.real(), (f(pts, y + Complex(h, 0)) - f(pts, y - Complex(h, 0))) / (2 * h)));
  worst = std::max(worst, rel(g.dy.imag(), (f(pts, y + Complex(0, h)) - f(pts, y - Complex(0, h))) / (2 * h)));
  EXPECT_LT(worst, 1e-5);
}

TEST(ConstellationJson, RoundTripAndValidation) {
  const auto j = qam16_gray().to_json();
  EXPECT_EQ(j.at("points").size(), 16u);
  EXPECT_TRUE(j.at("unit_power").get<bool>());
  const auto back = Constellation::from_json(j);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(back.point(i), qam16_gray().point(i));
  auto bad = j;
  bad["points"][0]["i"] = 5.0;
  EXPECT_THROW(Constellation::from_json(bad), std::invalid_argument);
  auto dup = j;
  dup["points"][1]["label"] = 0;
  EXPECT_THROW(Constellation::from_json(dup), std::invalid_argument);
}

TEST(ConstellationGeometry, QamIsUniform) {
  EXPECT_NEAR(nearest_neighbor_ratio(qam16_gray()), 1.0, 1e-12);
  EXPECT_GT(pairwise_distance_variance(qam16_gray()), 0.0);
}

TEST(Mapper, NormalizedAndQamInitExact) {
  for (std::uint64_t seed : {1u, 2u, 3u}) EXPECT_NEAR(Mapper(seed).constellation().average_power(), 1.0, 1e-12);
  const auto c = Mapper(qam16_gray()).constellation();
  for (int i = 0; i < 16; ++i) EXPECT_NEAR(std::abs(c.point(i) - qam16_gray().point(i)), 0.0, 1e-12);
}

TEST(Mapper, ZeroNoiseRoundTrip) {
  const auto c = Mapper(9).constellation();
  Rng rng(4);
  BitVector bits(400);
  for (std::size_t i = 0; i < bits.size(); ++i) bits.set(i, rng() & 1);
  const auto m = modulate_learned(bits, c);
  for (std::size_t s = 0; s < m.symbols.size(); ++s) {
    const auto post = soft_detect(m.symbols[s], c, 1e-4);
    const auto best = static_cast<int>(std::max_element(post.begin(), post.end()) - post.begin());
    int label = 0;
    for (int k = 0; k < 4; ++k) label = (label << 1) | bits[s * 4 + static_cast<std::size_t>(k)];
    EXPECT_EQ(best, label);
  }
}

TEST(Mapper, StreamPowerIsUnit) {
  const auto c = Mapper(11).constellation();
  Rng rng(5);
  BitVector bits(400000);
  for (std::size_t i = 0; i < bits.size(); ++i) bits.set(i, rng() & 1);
  double p = 0.0;
  const auto m = modulate_learned(bits, c);
  for (const auto& s : m.symbols) p += std::norm(s);
  EXPECT_NEAR(p / static_cast<double>(m.symbols.size()), 1.0, 0.01);
}

TEST(EndToEnd, SoftPathGradientCheck) {
  codec::CodecConfig cfg{5, 4, 6, 3, 8, 1, 9};
  codec::SemanticModel model(cfg, 3);
  Mapper mapper(4);
  const std::vector<std::vector<int>> batch{{3, 4, 5}, {6, 7, 8, 3}};
  Rng rng(6);
  const auto noise = sample_noise(2, 2, 0.2, rng);
  auto loss = [&](bool bw) { return e2e_loss(mapper, model, batch, noise, 0.2, codec::Quantizer::soft, bw, true); };
  const auto a = nn::gradient_check(mapper.params(), [&](bool bw) {
    nn::zero_grad(model.params());
    return loss(bw);
  });
  const auto b = nn::gradient_check(model.params(), [&](bool bw) {
    nn::zero_grad(mapper.params());
    return loss(bw);
  }, {1e-4, 300, 2, {}});
  EXPECT_LT(a.max_relative_error, 1e-4);
  EXPECT_LT(b.max_relative_error, 1e-4);
}

TEST(EndToEnd, FrozenCodecIsUntouched) {
  codec::CodecConfig cfg{5, 4, 6, 3, 8, 1, 9};
  codec::SemanticModel model(cfg, 3);
  const auto before = model.params().at("enc1.w").value;
  Mapper mapper(4);
  Rng rng(7);
  const auto noise = sample_noise(1, 2, 0.2, rng);
  nn::zero_grad(model.params());
  e2e_loss(mapper, model, {{3, 4}}, noise, 0.2, codec::Quantizer::hard, true, false);
  EXPECT_TRUE(model.params().at("enc1.w").grad.isZero());
  EXPECT_TRUE((model.params().at("enc1.w").value.array() == before.array()).all());
  EXPECT_FALSE(mapper.params().at("mapper.w").grad.isZero());
}

TEST(TrainConstellation, PowerInvariantAndProgress) {
  codec::CodecConfig cfg{6, 8, 32, 8, 24, 1, 12};
  std::vector<std::vector<int>> ids;
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    std::vector<int> s;
    const auto len = 2 + rng() % 5;
    for (std::size_t t = 0; t < len; ++t) s.push_back(3 + static_cast<int>(rng() % 9));
    ids.push_back(s);
  }
  codec::TrainOptions topt;
  topt.epochs = 15;
  topt.batch_size = 16;
  topt.learning_rate = 3e-3;
  topt.keep_prob = 1.0;
  const auto base = codec::train_codec(ids, cfg, topt).model;
  ConstellationTrainOptions opts;
  opts.epochs = 6;
  opts.batch_size = 16;
  opts.learning_rate = 5e-3;
  opts.snr_train_db = 6.0;
  const auto r = train_constellation(base, ids, opts);
  EXPECT_LE(r.max_power_error, 1e-9);
  EXPECT_NEAR(r.constellation.average_power(), 1.0, 1e-9);
  EXPECT_LT(r.epoch_loss.back(), r.initial_loss);
  EXPECT_EQ(r.steps, 6 * 13);
  EXPECT_THROW(train_constellation(codec::SemanticModel(codec::CodecConfig{6, 4, 4, 4, 24, 2, 12}, 1), ids, opts),
               std::invalid_argument);
}
