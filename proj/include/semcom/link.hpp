#pragma once

#include <cstddef>
#include <vector>

#include "semcom/bitvector.hpp"
#include "semcom/modulation.hpp"
#include "semcom/ofdm.hpp"

namespace semcom::link {

/// Counts what actually went over the air, independent of protocol bookkeeping.
struct PhyCounter {
  std::size_t payload_bits = 0;
  std::size_t frames = 0;
};

struct LinkResult {
  std::vector<double> llrs;  ///< one per payload bit, positive favours 0
  BitVector hard;            ///< hard decisions on the payload bits
};

/// Sends `bits` through the pilot-aided OFDM chain: bits fill the data
/// symbols of as many blocks as needed (zero-padded), each block sees an
/// independent channel draw, LS estimation on the pilot row, MMSE
/// equalization and max-log demodulation.
LinkResult transmit(const BitVector& bits, const mod::Constellation& constellation, const ofdm::OfdmConfig& cfg,
                    double snr_db, Rng& rng, PhyCounter* counter = nullptr);

/// Same chain with a single-tap unit channel and perfect channel knowledge.
LinkResult transmit_awgn(const BitVector& bits, const mod::Constellation& constellation, double snr_db, Rng& rng);

}  // namespace semcom::link
