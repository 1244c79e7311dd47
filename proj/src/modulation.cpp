#include "semcom/modulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace semcom::mod {

Constellation Constellation::from_matrix(const Eigen::Matrix<double, kPoints, 2>& m) {
  std::array<Complex, kPoints> pts{};
  for (int i = 0; i < kPoints; ++i) pts[static_cast<std::size_t>(i)] = Complex(m(i, 0), m(i, 1));
  return Constellation(pts);
}

Eigen::Matrix<double, kPoints, 2> Constellation::as_matrix() const {
  Eigen::Matrix<double, kPoints, 2> m;
  for (int i = 0; i < kPoints; ++i) {
    m(i, 0) = points_[static_cast<std::size_t>(i)].real();
    m(i, 1) = points_[static_cast<std::size_t>(i)].imag();
  }
  return m;
}

double Constellation::average_power() const {
  double p = 0.0;
  for (const auto& x : points_) p += std::norm(x);
  return p / kPoints;
}

nlohmann::json Constellation::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (int i = 0; i < kPoints; ++i)
    pts.push_back({{"label", i}, {"i", points_[static_cast<std::size_t>(i)].real()},
                   {"q", points_[static_cast<std::size_t>(i)].imag()}});
  const double power = average_power();
  return {{"points", pts}, {"average_power", power}, {"unit_power", std::abs(power - 1.0) <= 1e-9}};
}

Constellation Constellation::from_json(const nlohmann::json& j) {
  const auto& pts = j.at("points");
  if (pts.size() != kPoints) throw std::invalid_argument("Constellation: expected 16 points");
  std::array<Complex, kPoints> out{};
  std::array<bool, kPoints> seen{};
  for (const auto& p : pts) {
    const int label = p.at("label").get<int>();
    if (label < 0 || label >= kPoints || seen[static_cast<std::size_t>(label)])
      throw std::invalid_argument("Constellation: labels must be a bijection on 0..15");
    seen[static_cast<std::size_t>(label)] = true;
    out[static_cast<std::size_t>(label)] = Complex(p.at("i").get<double>(), p.at("q").get<double>());
  }
  Constellation c(out);
  if (std::abs(c.average_power() - 1.0) > 1e-9) throw std::invalid_argument("Constellation: average power is not 1");
  return c;
}

const Constellation& qam16_gray() {
  static const Constellation c = [] {
    constexpr double level[4] = {-3.0, -1.0, 3.0, 1.0};  // indexed by the 2-bit Gray pair 00, 01, 10, 11
    const double scale = 1.0 / std::sqrt(10.0);
    std::array<Complex, kPoints> pts{};
    for (int label = 0; label < kPoints; ++label)
      pts[static_cast<std::size_t>(label)] = Complex(level[label >> 2] * scale, level[label & 3] * scale);
    return Constellation(pts);
  }();
  return c;
}

Modulated modulate(const BitVector& bits, const Constellation& constellation) {
  Modulated out;
  const auto n = bits.size();
  out.pad_bits = static_cast<int>((kBitsPerSymbol - n % kBitsPerSymbol) % kBitsPerSymbol);
  const auto symbols = (n + static_cast<std::size_t>(out.pad_bits)) / kBitsPerSymbol;
  out.symbols.reserve(symbols);
  for (std::size_t s = 0; s < symbols; ++s) {
    int label = 0;
    for (int k = 0; k < kBitsPerSymbol; ++k) {
      const auto i = s * kBitsPerSymbol + static_cast<std::size_t>(k);
      label = (label << 1) | (i < n && bits[i] ? 1 : 0);
    }
    out.symbols.push_back(constellation.point(label));
  }
  return out;
}

std::vector<double> demod_soft(std::span<const Complex> symbols, const Constellation& constellation,
                               std::span<const double> gains, std::span<const double> noise_vars) {
  if (gains.size() != symbols.size() || noise_vars.size() != symbols.size())
    throw std::invalid_argument("demod_soft: one gain and noise variance per symbol required");
  std::vector<double> llrs;
  llrs.reserve(symbols.size() * kBitsPerSymbol);
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < symbols.size(); ++s) {
    const double g = gains[s];
    const double nv = noise_vars[s];
    if (g == 0.0) {
      llrs.insert(llrs.end(), kBitsPerSymbol, 0.0);
      continue;
    }
    if (!(nv > 0.0)) throw std::invalid_argument("demod_soft: noise variance must be positive");
    std::array<double, kBitsPerSymbol> d0, d1;
    d0.fill(inf);
    d1.fill(inf);
    for (int label = 0; label < kPoints; ++label) {
      const double d = std::norm(symbols[s] - g * constellation.point(label));
      for (int k = 0; k < kBitsPerSymbol; ++k) {
        auto& slot = label_bit(label, k) ? d1[static_cast<std::size_t>(k)] : d0[static_cast<std::size_t>(k)];
        slot = std::min(slot, d);
      }
    }
    for (int k = 0; k < kBitsPerSymbol; ++k)
      llrs.push_back((d1[static_cast<std::size_t>(k)] - d0[static_cast<std::size_t>(k)]) / nv);
  }
  return llrs;
}

std::vector<double> demod_soft(std::span<const Complex> symbols, const Constellation& constellation, double noise_var) {
  const std::vector<double> gains(symbols.size(), 1.0), nv(symbols.size(), noise_var);
  return demod_soft(symbols, constellation, gains, nv);
}

BitVector hard_decisions(std::span<const double> llrs) {
  BitVector out(llrs.size());
  for (std::size_t i = 0; i < llrs.size(); ++i) out.set(i, llrs[i] < 0.0);
  return out;
}

int nearest_label(Complex y, const Constellation& constellation) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int label = 0; label < kPoints; ++label) {
    const double d = std::norm(y - constellation.point(label));
    if (d < best_d) {
      best_d = d;
      best = label;
    }
  }
  return best;
}

std::array<double, kPoints> soft_detect(Complex y, const Constellation& constellation, double noise_var) {
  if (!(noise_var > 0.0)) throw std::invalid_argument("soft_detect: noise variance must be positive");
  std::array<double, kPoints> a{};
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kPoints; ++i) {
    a[static_cast<std::size_t>(i)] = -std::norm(y - constellation.point(i)) / noise_var;
    top = std::max(top, a[static_cast<std::size_t>(i)]);
  }
  double z = 0.0;
  for (auto& v : a) z += (v = std::exp(v - top));
  for (auto& v : a) v /= z;
  return a;
}

SoftDetectGrad soft_detect_backward(Complex y, const Eigen::Matrix<double, kPoints, 2>& points, double noise_var,
                                    const std::array<double, kPoints>& posterior,
                                    const std::array<double, kPoints>& dposterior) {
  double dot = 0.0;
  for (int i = 0; i < kPoints; ++i) dot += posterior[static_cast<std::size_t>(i)] * dposterior[static_cast<std::size_t>(i)];
  SoftDetectGrad g{Complex(0.0, 0.0), Eigen::Matrix<double, kPoints, 2>::Zero()};
  for (int i = 0; i < kPoints; ++i) {
    // a_i = -|y - p_i|^2 / nv
    const double da = posterior[static_cast<std::size_t>(i)] * (dposterior[static_cast<std::size_t>(i)] - dot);
    const double rx = y.real() - points(i, 0), ry = y.imag() - points(i, 1);
    const double k = 2.0 * da / noise_var;
    g.dy -= Complex(k * rx, k * ry);
    g.dpoints(i, 0) += k * rx;
    g.dpoints(i, 1) += k * ry;
  }
  return g;
}

double nearest_neighbor_ratio(const Constellation& c) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int i = 0; i < kPoints; ++i) {
    double nn = std::numeric_limits<double>::infinity();
    for (int j = 0; j < kPoints; ++j)
      if (j != i) nn = std::min(nn, std::abs(c.point(i) - c.point(j)));
    lo = std::min(lo, nn);
    hi = std::max(hi, nn);
  }
  return hi / lo;
}

double pairwise_distance_variance(const Constellation& c) {
  std::vector<double> d;
  for (int i = 0; i < kPoints; ++i)
    for (int j = i + 1; j < kPoints; ++j) d.push_back(std::abs(c.point(i) - c.point(j)));
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(d.size());
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  return var / static_cast<double>(d.size());
}

}  // namespace semcom::mod
