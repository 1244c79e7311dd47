#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "semcom/rng.hpp"

namespace semcom::ofdm {

using Complex = std::complex<double>;
using Samples = Eigen::VectorXcd;
/// Frequency-domain frame: one row per OFDM symbol, one column per subcarrier. Row 0 is the pilot.
using FrameGrid = Eigen::MatrixXcd;

struct OfdmConfig {
  int subcarriers = 64;
  int symbols = 8;
  int cyclic_prefix = 16;
  int taps = 8;
  double decay_db_per_tap = 3.0;
  std::uint64_t pilot_seed = 1;

  int data_symbols() const { return (symbols - 1) * subcarriers; }
  int samples_per_block() const { return symbols * (subcarriers + cyclic_prefix); }
  void validate() const;
};

/// Unit-magnitude QPSK pilot fixed by cfg.pilot_seed.
Eigen::VectorXcd pilot_sequence(const OfdmConfig& cfg);

/// Per-symbol IFFT scaled by 1/sqrt(N), cyclic prefix prepended.
Samples ofdm_modulate(const FrameGrid& grid, const OfdmConfig& cfg);
/// Drops each cyclic prefix and applies the unitary FFT.
FrameGrid ofdm_demodulate(const Samples& samples, const OfdmConfig& cfg);

/// Unitary DFT helpers (scale 1/sqrt(N) both ways).
Eigen::VectorXcd unitary_fft(const Eigen::VectorXcd& x);
Eigen::VectorXcd unitary_ifft(const Eigen::VectorXcd& x);

struct ChannelRealization {
  Eigen::VectorXcd taps;
};

/// Exponential profile, decay_db_per_tap per tap, normalized to unit sum.
Eigen::VectorXd power_delay_profile(const OfdmConfig& cfg);
/// Independent zero-mean complex Gaussian taps with the profile's variances.
ChannelRealization draw_channel(const OfdmConfig& cfg, Rng& rng);
/// Length-N DFT of the zero-padded taps (no 1/sqrt(N) factor).
Eigen::VectorXcd frequency_response(const ChannelRealization& h, int subcarriers);

/// Noise variance per complex sample for unit signal power.
inline double noise_variance(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

/// Circularly-symmetric Gaussian sample with E|n|^2 = variance.
Complex complex_gaussian(Rng& rng, double variance);

/// Linear convolution with the taps (truncated to the input length) plus
/// white noise at the given per-sample SNR. snr_db = +inf adds no noise.
Samples apply_channel(const Samples& samples, const ChannelRealization& h, double snr_db, Rng& rng);

/// Least-squares estimate Y_k / X_k per subcarrier.
Eigen::VectorXcd estimate_channel(const Eigen::VectorXcd& rx_pilot, const Eigen::VectorXcd& pilot);

struct Equalized {
  Eigen::MatrixXcd symbols;  ///< same shape as the input grid
  Eigen::MatrixXd gain;      ///< |H|^2 / (|H|^2 + noise_var), per resource element
};

/// Scalar MMSE per subcarrier: s = conj(H) y / (|H|^2 + noise_var).
Equalized equalize(const Eigen::MatrixXcd& rx, const Eigen::VectorXcd& channel, double noise_var);

/// 10 log10(max |x|^2 / mean |x|^2). Throws std::invalid_argument on empty input.
template <typename Derived>
double papr_db(const Eigen::MatrixBase<Derived>& x) {
  if (x.size() == 0) throw std::invalid_argument("papr_db: empty input");
  const auto power = x.cwiseAbs2();
  return 10.0 * std::log10(power.maxCoeff() / power.mean());
}

}  // namespace semcom::ofdm
