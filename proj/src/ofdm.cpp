#include "semcom/ofdm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <unsupported/Eigen/FFT>

#include "semcom/nn.hpp"

namespace semcom::ofdm {

void OfdmConfig::validate() const {
  if (subcarriers < 1 || symbols < 2) throw std::invalid_argument("OfdmConfig: need a pilot and a data symbol");
  if (taps < 1 || taps > cyclic_prefix) throw std::invalid_argument("OfdmConfig: taps must fit in the cyclic prefix");
}

Eigen::VectorXcd pilot_sequence(const OfdmConfig& cfg) {
  Rng rng(derive_seed(cfg.pilot_seed, hash_label("pilot")));
  const double a = 1.0 / std::sqrt(2.0);
  Eigen::VectorXcd p(cfg.subcarriers);
  for (int k = 0; k < cfg.subcarriers; ++k) {
    const auto r = rng();
    p(k) = Complex((r & 1U) ? a : -a, (r & 2U) ? a : -a);
  }
  return p;
}

Eigen::VectorXcd unitary_fft(const Eigen::VectorXcd& x) {
  Eigen::FFT<double> fft;
  Eigen::VectorXcd out;
  fft.fwd(out, x);
  return out / std::sqrt(static_cast<double>(x.size()));
}

Eigen::VectorXcd unitary_ifft(const Eigen::VectorXcd& x) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  Eigen::VectorXcd out;
  fft.inv(out, x);
  return out / std::sqrt(static_cast<double>(x.size()));
}

Samples ofdm_modulate(const FrameGrid& grid, const OfdmConfig& cfg) {
  if (grid.rows() != cfg.symbols || grid.cols() != cfg.subcarriers)
    throw std::invalid_argument("ofdm_modulate: grid does not match the configuration");
  const int n = cfg.subcarriers, cp = cfg.cyclic_prefix;
  Samples out(cfg.samples_per_block());
  for (int s = 0; s < cfg.symbols; ++s) {
    const Eigen::VectorXcd t = unitary_ifft(grid.row(s).transpose());
    const int base = s * (n + cp);
    out.segment(base, cp) = t.tail(cp);
    out.segment(base + cp, n) = t;
  }
  return out;
}

FrameGrid ofdm_demodulate(const Samples& samples, const OfdmConfig& cfg) {
  if (samples.size() != cfg.samples_per_block())
    throw std::invalid_argument("ofdm_demodulate: sample count does not match the configuration");
  const int n = cfg.subcarriers, cp = cfg.cyclic_prefix;
  FrameGrid grid(cfg.symbols, n);
  for (int s = 0; s < cfg.symbols; ++s) {
    const Eigen::VectorXcd t = samples.segment(s * (n + cp) + cp, n);
    grid.row(s) = unitary_fft(t).transpose();
  }
  return grid;
}

Eigen::VectorXd power_delay_profile(const OfdmConfig& cfg) {
  Eigen::VectorXd p(cfg.taps);
  for (int l = 0; l < cfg.taps; ++l) p(l) = std::pow(10.0, -cfg.decay_db_per_tap * l / 10.0);
  return p / p.sum();
}

Complex complex_gaussian(Rng& rng, double variance) {
  const double s = std::sqrt(variance / 2.0);
  const double re = nn::standard_normal(rng);
  const double im = nn::standard_normal(rng);
  return {s * re, s * im};
}

ChannelRealization draw_channel(const OfdmConfig& cfg, Rng& rng) {
  const auto pdp = power_delay_profile(cfg);
  ChannelRealization h{Eigen::VectorXcd(cfg.taps)};
  for (int l = 0; l < cfg.taps; ++l) h.taps(l) = complex_gaussian(rng, pdp(l));
  return h;
}

Eigen::VectorXcd frequency_response(const ChannelRealization& h, int subcarriers) {
  if (h.taps.size() > subcarriers) throw std::invalid_argument("frequency_response: more taps than subcarriers");
  Eigen::VectorXcd padded = Eigen::VectorXcd::Zero(subcarriers);
  padded.head(h.taps.size()) = h.taps;
  Eigen::FFT<double> fft;
  Eigen::VectorXcd out;
  fft.fwd(out, padded);
  return out;
}

Samples apply_channel(const Samples& samples, const ChannelRealization& h, double snr_db, Rng& rng) {
  if (std::isnan(snr_db)) throw std::invalid_argument("apply_channel: SNR is NaN");
  const auto n = samples.size();
  Samples out = Samples::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index l = 0; l < h.taps.size() && l <= i; ++l) out(i) += h.taps(l) * samples(i - l);
  if (std::isinf(snr_db) && snr_db > 0) return out;
  const double nv = noise_variance(snr_db);
  for (Eigen::Index i = 0; i < n; ++i) out(i) += complex_gaussian(rng, nv);
  return out;
}

Eigen::VectorXcd estimate_channel(const Eigen::VectorXcd& rx_pilot, const Eigen::VectorXcd& pilot) {
  if (rx_pilot.size() != pilot.size()) throw std::invalid_argument("estimate_channel: length mismatch");
  return rx_pilot.cwiseQuotient(pilot);
}

Equalized equalize(const Eigen::MatrixXcd& rx, const Eigen::VectorXcd& channel, double noise_var) {
  if (rx.cols() != channel.size()) throw std::invalid_argument("equalize: one channel estimate per subcarrier required");
  Equalized eq{Eigen::MatrixXcd(rx.rows(), rx.cols()), Eigen::MatrixXd(rx.rows(), rx.cols())};
  for (Eigen::Index k = 0; k < rx.cols(); ++k) {
    const double h2 = std::norm(channel(k));
    const double denom = h2 + noise_var;
    const double g = denom > 0.0 ? h2 / denom : 0.0;
    for (Eigen::Index s = 0; s < rx.rows(); ++s) {
      eq.symbols(s, k) = denom > 0.0 ? std::conj(channel(k)) * rx(s, k) / denom : Complex(0.0, 0.0);
      eq.gain(s, k) = g;
    }
  }
  return eq;
}

}  // namespace semcom::ofdm
