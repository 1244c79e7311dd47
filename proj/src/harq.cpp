#include "semcom/harq.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "semcom/similarity.hpp"

namespace semcom::harq {

HarqPolicy HarqPolicy::conventional() { return {Scheme::conventional, 3, Acceptance::crc, 0.98, 2}; }
HarqPolicy HarqPolicy::scharq_exact() { return {Scheme::scharq, 5, Acceptance::exact, 0.98, 2}; }
HarqPolicy HarqPolicy::scharq_similarity(double threshold) {
  return {Scheme::scharq, 5, Acceptance::similarity, threshold, 2};
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string HarqPolicy::label() const {
  if (scheme == Scheme::conventional) return "conventional";
  if (acceptance == Acceptance::exact) return "scharq-exact";
  std::ostringstream os;
  os << "scharq-sim" << threshold;
  return os.str();
}

std::string HarqPolicy::acceptance_name() const {
  switch (acceptance) {
    case Acceptance::crc:
      return "crc";
    case Acceptance::exact:
      return "exact-match";
    case Acceptance::similarity: {
      std::ostringstream os;
      os << "similarity>" << threshold;
      return os.str();
    }
  }
  return "unknown";
}

HarqPolicy HarqPolicy::parse(const std::string& label) {
  if (label == "conventional") return conventional();
  if (label == "scharq-exact") return scharq_exact();
  const std::string prefix = "scharq-sim";
  if (label.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    const auto rest = label.substr(prefix.size());
    double t = 0.0;
    try {
      t = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == rest.size() && used > 0) return scharq_similarity(t);
  }
  throw std::invalid_argument("unknown scheme: " + label);
}

void HarqPolicy::validate() const {
  if (max_rounds < 1) throw std::invalid_argument("HarqPolicy: max_rounds must be at least 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("HarqPolicy: threshold outside [0, 1]");
  if (scheme == Scheme::conventional && acceptance != Acceptance::crc)
    throw std::invalid_argument("HarqPolicy: conventional HARQ is CRC-gated");
  if (scheme == Scheme::scharq && acceptance == Acceptance::crc)
    throw std::invalid_argument("HarqPolicy: SCHARQ uses exact-match or similarity acceptance");
  if (initial_blocks < 1) throw std::invalid_argument("HarqPolicy: initial_blocks must be at least 1");
}

int segment_capacity(const fec::LdpcCode& code) { return code.k() - fec::CrcSpec::kWidth; }

std::vector<BitVector> segment_payload(const BitVector& payload, int capacity) {
  if (capacity < 1) throw std::invalid_argument("segment_payload: capacity must be positive");
  const auto n = payload.size();
  const auto cap = static_cast<std::size_t>(capacity);
  const std::size_t count = std::max<std::size_t>(1, (n + cap - 1) / cap);
  std::vector<BitVector> out;
  std::size_t pos = 0;
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t len = n / count + (s < n % count ? 1 : 0);
    out.push_back(payload.slice(pos, pos + len));
    pos += len;
  }
  return out;
}

SessionResult run_conventional(const std::vector<std::string>& tokens, double snr_db, const HarqPolicy& policy,
                               const ConventionalContext& ctx, Rng& rng) {
  policy.validate();
  if (policy.scheme != Scheme::conventional) throw std::invalid_argument("run_conventional: wrong scheme");
  if (!ctx.code || !ctx.table) throw std::invalid_argument("run_conventional: incomplete context");
  const auto& code = *ctx.code;
  ctx.schedule.validate(code);
  const int rounds = std::min(policy.max_rounds, ctx.schedule.rounds());

  const auto payload = huffman::encode(corpus::detokenize(tokens), *ctx.table);
  const auto segments = segment_payload(payload, segment_capacity(code));

  struct SegmentState {
    BitVector codeword;
    int info_len = 0;
    std::vector<fec::RoundLlrs> received;
    bool passed = false;
    BitVector decoded;  // payload without CRC
  };
  std::vector<SegmentState> state;
  for (const auto& seg : segments) {
    SegmentState st;
    const auto info = fec::crc_append(seg);
    st.info_len = static_cast<int>(info.size());
    st.codeword = code.encode(info);
    st.decoded = BitVector(seg.size());
    state.push_back(std::move(st));
  }

  SessionResult res;
  res.scheme = policy.label();
  for (int r = 1; r <= rounds; ++r) {
    BitVector air;
    std::vector<std::pair<std::size_t, std::size_t>> spans;  // (segment, bit count) in air order
    for (std::size_t s = 0; s < state.size(); ++s) {
      if (state[s].passed) continue;
      const auto sel = fec::select_bits(state[s].codeword, ctx.schedule, r, code, state[s].info_len);
      air.append(sel.bits);
      spans.emplace_back(s, sel.bits.size());
    }
    const auto rx = link::transmit(air, mod::qam16_gray(), ctx.ofdm, snr_db, rng, &res.phy);
    res.rounds = r;
    res.round_bits.push_back(air.size());
    res.bits += air.size();

    std::size_t offset = 0;
    for (auto [s, count] : spans) {
      auto& st = state[s];
      st.received.push_back({r, std::vector<double>(rx.llrs.begin() + static_cast<std::ptrdiff_t>(offset),
                                                    rx.llrs.begin() + static_cast<std::ptrdiff_t>(offset + count))});
      offset += count;
      const auto llrs = fec::assemble_llrs(st.received, ctx.schedule, code, st.info_len);
      const auto bp = fec::decode_bp(llrs, code, ctx.max_iters);
      const auto info = bp.info.slice(0, static_cast<std::size_t>(st.info_len));
      st.decoded = info.slice(0, info.size() - fec::CrcSpec::kWidth);
      st.passed = fec::crc_check(info);
    }
    if (std::all_of(state.begin(), state.end(), [](const auto& st) { return st.passed; })) break;
  }

  res.success = std::all_of(state.begin(), state.end(), [](const auto& st) { return st.passed; });
  BitVector payload_rx;
  for (const auto& st : state) payload_rx.append(st.decoded);
  const auto text = huffman::decode(payload_rx, *ctx.table);
  res.decoded = corpus::tokenize(text.text);
  res.similarity = similarity::sim_edit(res.decoded, tokens);
  return res;
}

SessionResult run_scharq(const std::vector<std::string>& tokens, double snr_db, const HarqPolicy& policy,
                         const ScharqContext& ctx, Rng& rng) {
  policy.validate();
  if (policy.scheme != Scheme::scharq) throw std::invalid_argument("run_scharq: wrong scheme");
  if (!ctx.model || !ctx.vocab) throw std::invalid_argument("run_scharq: incomplete context");
  const auto& model = *ctx.model;
  const int L = model.config().blocks;
  const int k0 = std::min(policy.initial_blocks, L);

  const auto ids = ctx.vocab->encode(tokens);
  const auto reference = ctx.vocab->decode(ids);  // what the codec can represent
  const auto blocks = codec::encode_semantic(model, ids);

  SessionResult res;
  res.scheme = policy.label();
  std::vector<codec::CodewordBlock> received;
  int next = 0;
  for (int r = 1; r <= policy.max_rounds && next < L; ++r) {
    const int count = r == 1 ? k0 : 1;
    BitVector air;
    for (int b = next; b < next + count; ++b) air.append(blocks[static_cast<std::size_t>(b)].bits);
    const auto rx = link::transmit(air, mod::qam16_gray(), ctx.ofdm, snr_db, rng, &res.phy);
    std::size_t offset = 0;
    for (int b = next; b < next + count; ++b) {
      const auto len = blocks[static_cast<std::size_t>(b)].bits.size();
      received.push_back({b + 1, rx.hard.slice(offset, offset + len)});
      offset += len;
    }
    next += count;
    res.rounds = r;
    res.round_bits.push_back(air.size());
    res.bits += air.size();

    const auto decoded = codec::decode_semantic(model, received);
    res.decoded = ctx.vocab->decode(decoded.ids);
    res.similarity = similarity::sim_edit(res.decoded, reference);
    res.success = policy.acceptance == Acceptance::exact ? decoded.ids == ids
                                                         : similarity::accept(res.similarity, policy.threshold);
    if (res.success) break;
  }
  return res;
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, std::min(centre - half, p)), std::min(1.0, std::max(centre + half, p))};
}

std::uint64_t session_seed(std::uint64_t base, Scheme scheme, double snr_db, std::size_t index) {
  const auto snr_key = static_cast<std::int64_t>(std::llround(snr_db * 1000.0));
  return derive_seed(base, hash_label(scheme == Scheme::conventional ? "conventional" : "scharq"),
                     static_cast<std::uint64_t>(snr_key), index);
}

std::vector<SessionResult> run_point(const HarqPolicy& policy, double snr_db,
                                     const std::vector<std::vector<std::string>>& sentences, const SweepContext& ctx,
                                     std::uint64_t base_seed, int workers) {
  policy.validate();
  if (policy.scheme == Scheme::conventional && !ctx.conventional)
    throw std::invalid_argument("run_point: conventional context missing");
  if (policy.scheme == Scheme::scharq && !ctx.scharq) throw std::invalid_argument("run_point: SCHARQ context missing");
  std::vector<SessionResult> results(sentences.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < sentences.size(); i += stride) {
      Rng rng(session_seed(base_seed, policy.scheme, snr_db, i));
      results[i] = policy.scheme == Scheme::conventional
                       ? run_conventional(sentences[i], snr_db, policy, *ctx.conventional, rng)
                       : run_scharq(sentences[i], snr_db, policy, *ctx.scharq, rng);
    }
  };
  const auto n_workers = static_cast<std::size_t>(std::max(1, workers));
  if (n_workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work, w, n_workers);
    for (auto& t : pool) t.join();
  }
  return results;
}

SweepRow summarize(const HarqPolicy& policy, double snr_db, const std::vector<SessionResult>& results,
                   std::uint64_t base_seed) {
  SweepRow row;
  row.snr_db = snr_db;
  row.scheme = policy.label();
  row.acceptance = policy.acceptance_name();
  row.n = results.size();
  row.seed = base_seed;
  std::size_t ok = 0;
  double bits = 0.0, sim = 0.0;
  for (const auto& r : results) {
    ok += r.success;
    bits += static_cast<double>(r.bits);
    sim += r.similarity;
  }
  if (row.n > 0) {
    row.success_rate = static_cast<double>(ok) / static_cast<double>(row.n);
    row.mean_bits = bits / static_cast<double>(row.n);
    row.mean_similarity = sim / static_cast<double>(row.n);
  }
  row.wilson = wilson_interval(ok, row.n);
  return row;
}

SweepTable sweep(const std::vector<HarqPolicy>& schemes, const std::vector<double>& snrs,
                 const std::vector<std::vector<std::string>>& sentences, const SweepContext& ctx,
                 std::uint64_t base_seed, int workers) {
  if (schemes.empty() || snrs.empty()) throw std::invalid_argument("sweep: scheme and SNR lists must be non-empty");
  SweepTable table;
  for (const auto& policy : schemes)
    for (double snr : snrs)
      table.push_back(summarize(policy, snr, run_point(policy, snr, sentences, ctx, base_seed, workers), base_seed));
  std::stable_sort(table.begin(), table.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.scheme != b.scheme ? a.scheme < b.scheme : a.snr_db < b.snr_db;
  });
  return table;
}

std::string to_csv(const SweepTable& table) {
  std::ostringstream os;
  os << kSweepCsvHeader << '\n';
  for (const auto& r : table) {
    os << format_real(r.snr_db) << ',' << r.scheme << ',' << r.acceptance << ',' << r.metric << ','
       << format_real(r.success_rate) << ',' << format_real(r.wilson.low) << ',' << format_real(r.wilson.high) << ','
       << format_real(r.mean_bits) << ',' << format_real(r.mean_similarity) << ',' << r.n << ',' << r.seed << '\n';
  }
  return os.str();
}

}  // namespace semcom::harq
