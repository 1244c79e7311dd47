#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <span>
#include <vector>

#include "json.hpp"
#include "semcom/bitvector.hpp"

namespace semcom::mod {

using Complex = std::complex<double>;

inline constexpr int kPoints = 16;
inline constexpr int kBitsPerSymbol = 4;

/// Bit k (0 = first transmitted, most significant) of a 4-bit label.
constexpr int label_bit(int label, int k) { return (label >> (kBitsPerSymbol - 1 - k)) & 1; }

/// Sixteen points indexed by their 4-bit label. The labeling is fixed; only
/// the geometry changes between constellations.
class Constellation {
 public:
  Constellation() = default;
  explicit Constellation(const std::array<Complex, kPoints>& points) : points_(points) {}
  /// 16 x 2 matrix of (in-phase, quadrature) rows.
  static Constellation from_matrix(const Eigen::Matrix<double, kPoints, 2>& m);

  const Complex& point(int label) const { return points_.at(static_cast<std::size_t>(label)); }
  const std::array<Complex, kPoints>& points() const noexcept { return points_; }
  Eigen::Matrix<double, kPoints, 2> as_matrix() const;

  double average_power() const;

  /// {"points": [{"label", "i", "q"} x16], "average_power", "unit_power"}.
  nlohmann::json to_json() const;
  /// Throws std::invalid_argument unless there are 16 distinct labels and unit power within 1e-9.
  static Constellation from_json(const nlohmann::json& j);

 private:
  std::array<Complex, kPoints> points_{};
};

/// Gray-mapped 16-QAM, scaled by 1/sqrt(10). The first two bits of a label
/// select the in-phase level and the last two the quadrature level, both with
/// 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3. Label 0000 is the corner (-3, -3)/sqrt(10).
const Constellation& qam16_gray();

struct Modulated {
  std::vector<Complex> symbols;
  int pad_bits = 0;  ///< zero bits appended to reach a multiple of 4
};

Modulated modulate(const BitVector& bits, const Constellation& constellation);
inline Modulated qam16_modulate(const BitVector& bits) { return modulate(bits, qam16_gray()); }
inline Modulated modulate_learned(const BitVector& bits, const Constellation& c) { return modulate(bits, c); }

/// Max-log LLRs for y = gain * s + noise: four values per symbol, positive
/// when bit 0 is more likely. A zero gain yields zero LLRs (erasure).
std::vector<double> demod_soft(std::span<const Complex> symbols, const Constellation& constellation,
                               std::span<const double> gains, std::span<const double> noise_vars);
std::vector<double> demod_soft(std::span<const Complex> symbols, const Constellation& constellation, double noise_var);

/// Bit 1 where llr < 0.
BitVector hard_decisions(std::span<const double> llrs);

/// Label of the closest point.
int nearest_label(Complex y, const Constellation& constellation);

/// Posterior over the 16 labels: softmax of -|y - p_i|^2 / noise_var.
std::array<double, kPoints> soft_detect(Complex y, const Constellation& constellation, double noise_var);

struct SoftDetectGrad {
  Complex dy;
  Eigen::Matrix<double, kPoints, 2> dpoints;
};

/// Chain rule through soft_detect given d(loss)/d(posterior).
SoftDetectGrad soft_detect_backward(Complex y, const Eigen::Matrix<double, kPoints, 2>& points, double noise_var,
                                    const std::array<double, kPoints>& posterior,
                                    const std::array<double, kPoints>& dposterior);

/// Nearest-neighbour distance ratio max/min over the points.
double nearest_neighbor_ratio(const Constellation& c);
/// Population variance of the 120 pairwise distances.
double pairwise_distance_variance(const Constellation& c);

}  // namespace semcom::mod
