#include "semcom/fec.hpp"

namespace semcom::fec {

std::uint16_t crc16(const BitVector& bits, const CrcSpec& spec) {
  std::uint16_t reg = spec.init;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const bool top = (reg & 0x8000U) != 0;
    reg = static_cast<std::uint16_t>(reg << 1);
    if (top != bits[i]) reg ^= spec.poly;
  }
  return reg;
}

BitVector crc_append(const BitVector& msg, const CrcSpec& spec) {
  BitVector out = msg;
  const auto crc = crc16(msg, spec);
  for (int b = CrcSpec::kWidth - 1; b >= 0; --b) out.push_back((crc >> b) & 1U);
  return out;
}

bool crc_check(const BitVector& msg_with_crc, const CrcSpec& spec) {
  if (msg_with_crc.size() < static_cast<std::size_t>(CrcSpec::kWidth)) return false;
  const auto body = msg_with_crc.size() - CrcSpec::kWidth;
  const auto crc = crc16(msg_with_crc.slice(0, body), spec);
  for (int b = 0; b < CrcSpec::kWidth; ++b) {
    if (msg_with_crc[body + static_cast<std::size_t>(b)] != (((crc >> (CrcSpec::kWidth - 1 - b)) & 1U) != 0))
      return false;
  }
  return true;
}

}  // namespace semcom::fec
