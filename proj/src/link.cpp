#include "semcom/link.hpp"

#include <cmath>

namespace semcom::link {

LinkResult transmit(const BitVector& bits, const mod::Constellation& constellation, const ofdm::OfdmConfig& cfg,
                    double snr_db, Rng& rng, PhyCounter* counter) {
  cfg.validate();
  const std::size_t bits_per_frame = static_cast<std::size_t>(cfg.data_symbols()) * mod::kBitsPerSymbol;
  const std::size_t frames = std::max<std::size_t>(1, (bits.size() + bits_per_frame - 1) / bits_per_frame);
  const auto pilot = ofdm::pilot_sequence(cfg);
  const double nv = std::isinf(snr_db) ? 0.0 : ofdm::noise_variance(snr_db);
  // demodulator needs a positive variance even for a noiseless link
  const double demod_nv_floor = 1e-12;

  LinkResult out;
  out.llrs.reserve(bits.size());
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t begin = f * bits_per_frame;
    const std::size_t end = std::min(bits.size(), begin + bits_per_frame);
    BitVector chunk = bits.slice(begin, end);
    chunk.resize(bits_per_frame);
    const auto symbols = mod::modulate(chunk, constellation).symbols;

    ofdm::FrameGrid grid(cfg.symbols, cfg.subcarriers);
    grid.row(0) = pilot.transpose();
    for (int i = 0; i < cfg.data_symbols(); ++i)
      grid(1 + i / cfg.subcarriers, i % cfg.subcarriers) = symbols[static_cast<std::size_t>(i)];

    const auto h = ofdm::draw_channel(cfg, rng);
    const auto rx = ofdm::ofdm_demodulate(ofdm::apply_channel(ofdm::ofdm_modulate(grid, cfg), h, snr_db, rng), cfg);
    const auto est = ofdm::estimate_channel(rx.row(0).transpose(), pilot);
    const auto eq = ofdm::equalize(rx.bottomRows(cfg.symbols - 1), est, nv);

    const std::size_t used = (end - begin + mod::kBitsPerSymbol - 1) / mod::kBitsPerSymbol;
    std::vector<mod::Complex> ys(used);
    std::vector<double> gains(used), nvs(used);
    for (std::size_t i = 0; i < used; ++i) {
      const auto r = static_cast<Eigen::Index>(i) / cfg.subcarriers, c = static_cast<Eigen::Index>(i) % cfg.subcarriers;
      ys[i] = eq.symbols(r, c);
      gains[i] = eq.gain(r, c);
      nvs[i] = std::max(gains[i] * (1.0 - gains[i]), demod_nv_floor);
    }
    const auto llrs = mod::demod_soft(ys, constellation, gains, nvs);
    out.llrs.insert(out.llrs.end(), llrs.begin(), llrs.begin() + static_cast<std::ptrdiff_t>(end - begin));
  }
  out.hard = mod::hard_decisions(out.llrs);
  if (counter) {
    counter->payload_bits += bits.size();
    counter->frames += frames;
  }
  return out;
}

LinkResult transmit_awgn(const BitVector& bits, const mod::Constellation& constellation, double snr_db, Rng& rng) {
  const auto tx = mod::modulate(bits, constellation);
  const double nv = ofdm::noise_variance(snr_db);
  std::vector<mod::Complex> ys;
  ys.reserve(tx.symbols.size());
  for (const auto& s : tx.symbols) ys.push_back(s + ofdm::complex_gaussian(rng, nv));
  auto llrs = mod::demod_soft(ys, constellation, nv);
  llrs.resize(bits.size());
  LinkResult out{std::move(llrs), {}};
  out.hard = mod::hard_decisions(out.llrs);
  return out;
}

}  // namespace semcom::link
