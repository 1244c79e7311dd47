// End-to-end acceptance run: one PASS/FAIL line per criterion.
//
//   semcom_acceptance [work_dir]
//
// Builds a synthetic corpus, runs prepare / train / sweep / modexp with the
// settings below, and checks the results. Expect roughly an hour on one core.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "semcom/constellation_training.hpp"
#include "semcom/experiment.hpp"
#include "semcom/link.hpp"
#include "semcom/synth_corpus.hpp"

namespace fs = std::filesystem;
using namespace semcom;
using namespace semcom::experiment;

namespace {

struct Verdict {
  int id;
  bool pass;
  std::string detail;
};

std::vector<Verdict> verdicts;

void record(int id, bool pass, const std::string& detail) {
  verdicts.push_back({id, pass, detail});
  std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << detail << std::endl;
}

std::ostream& progress() { return std::cerr << "[acceptance] "; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

/// Exact bit-error probability of Gray-mapped square 16-QAM at Es/N0 = snr.
double qam16_ber(double snr_db) {
  const double a = std::sqrt(std::pow(10.0, snr_db / 10.0) / 5.0);
  return 0.25 * (3.0 * q_function(a) + 2.0 * q_function(3.0 * a) - q_function(5.0 * a));
}

BitVector random_bits(std::size_t n, Rng& rng) {
  BitVector b(n);
  for (std::size_t i = 0; i < n; ++i) b.set(i, rng() & 1);
  return b;
}

bool separated(const harq::WilsonInterval& lo, const harq::WilsonInterval& hi) { return lo.high < hi.low; }

// ---------------------------------------------------------------- 1

void criterion_ofdm() {
  ofdm::OfdmConfig cfg;
  Rng rng(101);
  double worst_roundtrip = 0.0, worst_parseval = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    ofdm::FrameGrid grid(cfg.symbols, cfg.subcarriers);
    for (Eigen::Index i = 0; i < grid.size(); ++i) grid.data()[i] = ofdm::complex_gaussian(rng, 1.0);
    const auto tx = ofdm::ofdm_modulate(grid, cfg);
    worst_roundtrip = std::max(worst_roundtrip, (ofdm::ofdm_demodulate(tx, cfg) - grid).cwiseAbs().maxCoeff());
    const int stride = cfg.subcarriers + cfg.cyclic_prefix;
    for (int s = 0; s < cfg.symbols; ++s) {
      const double time = tx.segment(s * stride + cfg.cyclic_prefix, cfg.subcarriers).squaredNorm();
      worst_parseval = std::max(worst_parseval, std::abs(time - grid.row(s).squaredNorm()));
    }
  }
  record(1, worst_roundtrip < 1e-9 && worst_parseval < 1e-9,
         "max roundtrip error " + fmt(worst_roundtrip) + ", max Parseval error " + fmt(worst_parseval));
}

// ---------------------------------------------------------------- 2

void criterion_qam_ber() {
  Rng rng(202);
  const std::size_t n_bits = 1'200'000;
  bool ok = true;
  std::string detail;
  for (double snr : {6.0, 10.0, 14.0}) {
    const auto bits = random_bits(n_bits, rng);
    const auto rx = link::transmit_awgn(bits, mod::qam16_gray(), snr, rng);
    const double ber = static_cast<double>(hamming_distance(rx.hard, bits)) / static_cast<double>(n_bits);
    const double theory = qam16_ber(snr);
    const double rel = std::abs(ber - theory) / theory;
    ok = ok && rel < 0.05;
    detail += fmt(snr, 3) + " dB: " + fmt(ber) + " vs " + fmt(theory) + " (" + fmt(100 * rel, 2) + "%); ";
  }
  record(2, ok, detail + fmt(static_cast<double>(n_bits), 3) + " bits per point");
}

// ---------------------------------------------------------------- 3

void criterion_huffman(const Prepared& p) {
  std::size_t lossless = 0;
  double bits = 0.0;
  for (const auto& s : p.split.test) {
    const auto text = s.text();
    const auto enc = huffman::encode(text, p.table);
    bits += static_cast<double>(enc.size());
    lossless += huffman::decode(enc, p.table).text == text;
  }
  const double n = static_cast<double>(p.split.test.size());
  const double mean = bits / n;
  record(3, lossless == p.split.test.size() && mean >= 0.8 * 460 && mean <= 1.2 * 460,
         std::to_string(lossless) + "/" + std::to_string(p.split.test.size()) + " lossless, mean " + fmt(mean) +
             " bits (target 460 +/- 20%)");
}

// ---------------------------------------------------------------- 4

fec::LdpcCode toy_code() {
  const int h[3][7] = {{1, 1, 0, 1, 1, 0, 0}, {1, 0, 1, 1, 0, 1, 0}, {0, 1, 1, 1, 0, 0, 1}};
  std::vector<std::pair<int, int>> entries;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 7; ++c)
      if (h[r][c]) entries.emplace_back(r, c);
  return fec::LdpcCode::from_parity_check(3, 7, entries);
}

void criterion_ldpc(const fec::LdpcCode& code) {
  Rng rng(404);
  int zero_syndrome = 0;
  for (int i = 0; i < 10000; ++i) zero_syndrome += code.syndrome(code.encode(random_bits(460, rng))).count_ones() == 0;

  const auto toy = toy_code();
  std::vector<BitVector> book;
  for (int v = 0; v < 16; ++v) book.push_back(toy.encode(BitVector{(v >> 3) & 1, (v >> 2) & 1, (v >> 1) & 1, v & 1}));
  const double sigma2 = std::pow(10.0, -8.0 / 10.0);
  int agree = 0;
  const int toy_trials = 10000;
  for (int t = 0; t < toy_trials; ++t) {
    const auto& sent = book[rng() % 16];
    std::vector<double> y(7), llr(7);
    for (std::size_t i = 0; i < 7; ++i) {
      y[i] = (sent[i] ? -1.0 : 1.0) + std::sqrt(sigma2) * nn::standard_normal(rng);
      llr[i] = 2.0 * y[i] / sigma2;
    }
    std::size_t best = 0;
    double best_corr = -1e300;
    for (std::size_t k = 0; k < book.size(); ++k) {
      double corr = 0.0;
      for (std::size_t i = 0; i < 7; ++i) corr += y[i] * (book[k][i] ? -1.0 : 1.0);
      if (corr > best_corr) best_corr = corr, best = k;
    }
    agree += fec::decode_bp(llr, toy).codeword == book[best];
  }

  // Rate 5/16 (all 1472 bits) over the pilot-aided 16-QAM OFDM fading chain.
  // The curve is nearly flat at 0-2 dB, so those points need many blocks.
  const std::vector<std::pair<double, int>> points{{0.0, 20000}, {2.0, 20000}, {4.0, 4000}, {6.0, 2000}};
  std::vector<double> bler;
  std::vector<harq::WilsonInterval> ci;
  std::string curve;
  for (auto [snr, blocks] : points) {
    Rng brng(derive_seed(4040, static_cast<std::uint64_t>(snr * 10)));
    std::size_t errors = 0;
    for (int b = 0; b < blocks; ++b) {
      const auto info = random_bits(460, brng);
      const auto rx = link::transmit(code.encode(info), mod::qam16_gray(), ofdm::OfdmConfig{}, snr, brng);
      errors += !(fec::decode_bp(rx.llrs, code, 50).info == info);
    }
    bler.push_back(static_cast<double>(errors) / blocks);
    ci.push_back(harq::wilson_interval(errors, static_cast<std::size_t>(blocks)));
    curve += fmt(snr, 2) + " dB " + fmt(bler.back(), 5) + " [" + fmt(ci.back().low, 5) + ", " + fmt(ci.back().high, 5) +
             "] n=" + std::to_string(blocks) + "; ";
    progress() << "BLER " << snr << " dB " << bler.back() << std::endl;
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < bler.size(); ++i) decreasing = decreasing && separated(ci[i], ci[i - 1]);
  record(4, zero_syndrome == 10000 && agree >= 0.99 * toy_trials && decreasing,
         std::to_string(zero_syndrome) + "/10000 zero syndromes; toy BP=ML " + fmt(100.0 * agree / toy_trials) +
             "%; BLER " + curve);
}

// ---------------------------------------------------------------- 5

double layer_checks() {
  Rng rng(505);
  double worst = 0.0;
  nn::ParameterMap p;
  p.emplace("w", nn::Parameter(nn::glorot_uniform(5, 4, rng)));
  p.emplace("b", nn::Parameter(nn::Matrix::Random(1, 4)));
  nn::Matrix x = nn::Matrix::Random(3, 5);
  nn::Matrix target = nn::Matrix::Random(3, 4);
  // affine + squared error
  auto affine = [&](bool bw) {
    const nn::Matrix y = nn::affine_forward(x, p.at("w").value, p.at("b").value.row(0));
    const nn::Matrix d = y - target;
    if (bw) {
      const auto g = nn::affine_backward(x, p.at("w").value, d);
      p.at("w").grad += g.dw;
      p.at("b").grad += g.db;
    }
    return 0.5 * d.squaredNorm();
  };
  worst = std::max(worst, nn::gradient_check(p, affine).max_relative_error);
  // each activation behind an affine layer, kept away from the relu kink
  for (auto kind : {nn::Activation::tanh, nn::Activation::relu}) {
    auto act = [&](bool bw) {
      const nn::Matrix z = nn::affine_forward(x, p.at("w").value, p.at("b").value.row(0));
      const nn::Matrix y = nn::activation_forward(z, kind);
      const nn::Matrix d = y - target;
      if (bw) {
        const auto g = nn::affine_backward(x, p.at("w").value, nn::activation_backward(y, d, kind));
        p.at("w").grad += g.dw;
        p.at("b").grad += g.db;
      }
      return 0.5 * d.squaredNorm();
    };
    worst = std::max(worst, nn::gradient_check(p, act, {1e-6, 100, 1, {}}).max_relative_error);
  }
  // softmax cross-entropy
  const std::vector<int> labels{1, 3, 0};
  auto ce = [&](bool bw) {
    const nn::Matrix z = nn::affine_forward(x, p.at("w").value, p.at("b").value.row(0));
    const auto l = nn::softmax_cross_entropy_rows(z, labels);
    if (bw) {
      const auto g = nn::affine_backward(x, p.at("w").value, l.grad);
      p.at("w").grad += g.dw;
      p.at("b").grad += g.db;
    }
    return l.loss;
  };
  worst = std::max(worst, nn::gradient_check(p, ce).max_relative_error);
  return worst;
}

double negative_control() {
  codec::SemanticModel m(codec::CodecConfig{6, 4, 8, 4, 12, 3, 10}, 5);
  Rng rng(506);
  const std::vector<std::vector<int>> batch{{4, 5, 6}, {7, 8, 9, 4}};
  const auto ch = codec::sample_channel(m.config(), 2, 0.2, 0.7, rng);
  return nn::gradient_check(m.params(), [&](bool bw) {
    const double l = codec::codec_loss(m, batch, ch, codec::Quantizer::soft, bw);
    if (bw) m.params().at("enc1.w").grad *= 1.1;  // deliberately wrong backward pass
    return l;
  }, {1e-5, 2000, 1, {}}).max_relative_error;
}

void criterion_gradients() {
  std::ostringstream sink;
  const auto full = cmd_gradcheck(ExperimentConfig{}, sink);
  const double layers = layer_checks();
  const double corrupted = negative_control();
  record(5, full.max_relative_error < 1e-4 && layers < 1e-4 && corrupted > 1e-2,
         "layers " + fmt(layers) + ", codec soft path and mapper " + fmt(full.max_relative_error) +
             ", corrupted backward " + fmt(corrupted));
}

// ---------------------------------------------------------------- 6

void criterion_constellation(const fs::path& out) {
  const auto c = mod::Constellation::from_json(nlohmann::json::parse(slurp(out / files::kConstellation)));
  std::istringstream csv(slurp(out / files::kConstellationLoss));
  std::string line;
  std::getline(csv, line);
  double worst_power = 0.0, first_loss = 0.0, last_loss = 0.0;
  int rows = 0;
  while (std::getline(csv, line)) {
    std::istringstream row(line);
    std::string epoch, loss, perr;
    std::getline(row, epoch, ',');
    std::getline(row, loss, ',');
    std::getline(row, perr, ',');
    worst_power = std::max(worst_power, std::stod(perr));
    (rows++ == 0 ? first_loss : last_loss) = std::stod(loss);
  }
  const double var = mod::pairwise_distance_variance(c);
  const double ratio = mod::nearest_neighbor_ratio(c);
  worst_power = std::max(worst_power, std::abs(c.average_power() - 1.0));
  record(6, worst_power <= 1e-9 && var > 0.01 && ratio > 1.1,
         "worst power error " + fmt(worst_power) + ", pairwise-distance variance " + fmt(var) +
             ", nearest-neighbour ratio " + fmt(ratio) + ", probe loss " + fmt(first_loss) + " -> " + fmt(last_loss));
}

// ---------------------------------------------------------------- 7

void criterion_modexp(const std::vector<ModexpRow>& rows) {
  std::map<double, std::pair<const ModexpRow*, const ModexpRow*>> by_snr;  // qam, trained
  for (const auto& r : rows) (r.modulation == "qam16" ? by_snr[r.snr_db].first : by_snr[r.snr_db].second) = &r;
  bool ok = !by_snr.empty();
  std::string detail;
  const double lowest = by_snr.begin()->first;
  for (const auto& [snr, pair] : by_snr) {
    const auto [q, t] = pair;
    detail += fmt(snr, 3) + " dB qam " + fmt(q->mean_similarity) + " trained " + fmt(t->mean_similarity) + " p " +
              fmt(t->p_trained_better, 3) + "; ";
    if (snr == lowest) ok = ok && t->mean_similarity >= q->mean_similarity && t->p_trained_better < 0.05;
    if (snr >= 15.0) ok = ok && std::abs(t->mean_similarity - q->mean_similarity) <= 0.02;
    ok = ok && q->n >= 2000;
  }
  record(7, ok, detail + "n=" + std::to_string(rows.front().n));
}

// ---------------------------------------------------------------- 8

void criterion_harq(const harq::SweepTable& table) {
  std::map<std::string, std::vector<const harq::SweepRow*>> curves;
  for (const auto& r : table) curves[r.scheme].push_back(&r);  // already sorted by snr
  const auto& conv = curves["conventional"];
  const auto& exact = curves["scharq-exact"];
  const auto& sim = curves["scharq-sim0.98"];
  bool a = !exact.empty() && exact.size() == sim.size();
  for (std::size_t i = 0; a && i < exact.size(); ++i) a = sim[i]->success_rate >= exact[i]->success_rate;
  bool b = true;
  int low_points = 0;
  for (std::size_t i = 0; i < exact.size() && i < conv.size(); ++i) {
    if (exact[i]->snr_db < 0.0 || exact[i]->snr_db > 4.0) continue;
    ++low_points;
    b = b && exact[i]->n >= 2000 && separated(conv[i]->wilson, exact[i]->wilson);
  }
  b = b && low_points > 0;
  bool c = true;
  for (const auto* curve : {&conv, &exact, &sim})
    for (std::size_t i = 1; i < curve->size(); ++i)
      c = c && ((*curve)[i]->success_rate >= (*curve)[i - 1]->success_rate ||
                (*curve)[i]->wilson.high >= (*curve)[i - 1]->wilson.low);
  std::string detail = std::string("(a) ") + (a ? "yes" : "no") + " (b) " + (b ? "yes" : "no") + " (c) " +
                       (c ? "yes" : "no") + "; ";
  for (const auto& [name, curve] : curves) {
    detail += name + ":";
    for (const auto* r : curve) detail += " " + fmt(r->snr_db, 3) + "dB=" + fmt(r->success_rate, 3);
    detail += "; ";
  }
  record(8, a && b && c, detail);
}

// ---------------------------------------------------------------- 9

ExperimentConfig small_config(const fs::path& dir, const std::string& corpus_path) {
  ExperimentConfig cfg;
  cfg.corpus.path = corpus_path;
  cfg.corpus.n_train = 1500;
  cfg.corpus.n_test = 200;
  cfg.codec.codec.hidden = 64;
  cfg.codec.epochs = 1;
  cfg.constellation.codec.codec.hidden = 64;
  cfg.constellation.codec.epochs = 1;
  cfg.constellation.epochs = 1;
  cfg.sweep = {{4.0, 12.0}, 30};
  cfg.modexp = {{4.0, 16.0}, 30};
  cfg.workers = 2;
  cfg.out = dir.string();
  return cfg;
}

void run_pipeline(const ExperimentConfig& cfg) {
  std::ostringstream sink;
  cmd_prepare(cfg, sink);
  cmd_train(cfg, TrainTarget::codec, sink);
  cmd_train(cfg, TrainTarget::constellation, sink);
  cmd_sweep(cfg, sink);
  cmd_modexp(cfg, sink);
}

void criterion_reproducibility(const fs::path& work, const ExperimentConfig& main_cfg) {
  const std::string small_corpus = (work / "small_corpus.txt").string();
  {
    std::ofstream out(small_corpus);
    for (const auto& line : corpus::synthesize_lines(2000, 9)) out << line << '\n';
  }
  const fs::path a = work / "repro_a", b = work / "repro_b";
  fs::remove_all(a);
  fs::remove_all(b);
  run_pipeline(small_config(a, small_corpus));
  run_pipeline(small_config(b, small_corpus));

  std::size_t compared = 0, identical = 0;
  std::string differing;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename().string();
    if (name == files::kManifest) continue;  // carries wall-clock timings
    ++compared;
    if (slurp(entry.path()) == slurp(b / name)) ++identical;
    else differing += name + " ";
  }
  // the full-size prepare stage, rerun into a fresh directory
  auto again = main_cfg;
  again.out = (work / "repro_prepare").string();
  fs::remove_all(again.out);
  std::ostringstream sink;
  cmd_prepare(again, sink);
  for (const char* name : {files::kTrainSplit, files::kTestSplit, files::kVocab, files::kHuffman, files::kLdpc}) {
    ++compared;
    if (slurp(fs::path(main_cfg.out) / name) == slurp(fs::path(again.out) / name)) ++identical;
    else differing += std::string(name) + "(full) ";
  }
  record(9, compared >= 20 && identical == compared,
         std::to_string(identical) + "/" + std::to_string(compared) + " artifacts byte-identical across reruns" +
             (differing.empty() ? "" : "; differing: " + differing));
}

/// Settings used for every reported number.
ExperimentConfig main_config(const fs::path& work) {
  ExperimentConfig cfg;
  cfg.corpus.path = (work / "corpus.txt").string();
  cfg.out = (work / "run").string();
  cfg.sweep = {{0.0, 2.0, 4.0, 8.0, 12.0, 16.0}, 2000};
  cfg.modexp = {{4.0, 8.0, 12.0, 16.0, 20.0}, 2000};
  return cfg;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::current_path() / "acceptance_work";
  fs::create_directories(work);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    criterion_ofdm();
    criterion_qam_ber();

    const auto cfg = main_config(work);
    {
      std::ofstream out(cfg.corpus.path);
      for (const auto& line : corpus::synthesize_lines(130000, 42)) out << line << '\n';
    }
    fs::remove_all(cfg.out);
    fs::create_directories(cfg.out);
    std::ofstream(fs::path(cfg.out).parent_path() / "acceptance_config.json") << cfg.to_json().dump(2) << '\n';
    std::ostringstream log;
    cmd_prepare(cfg, log);
    const auto prepared = load_prepared(cfg);
    criterion_huffman(prepared);
    criterion_ldpc(prepared.code);
    criterion_gradients();
    progress() << "LDPC done at " << since(t0) << " s" << std::endl;

    cmd_train(cfg, TrainTarget::codec, progress());
    cmd_train(cfg, TrainTarget::constellation, progress());
    criterion_constellation(cfg.out);
    criterion_modexp(cmd_modexp(cfg, progress()));
    progress() << "modexp done at " << since(t0) << " s" << std::endl;
    criterion_harq(cmd_sweep(cfg, progress()));
    progress() << "sweep done at " << since(t0) << " s" << std::endl;
    criterion_reproducibility(work, cfg);
  } catch (const std::exception& e) {
    std::cout << "acceptance run aborted: " << e.what() << std::endl;
    return 2;
  }
  const auto failed = std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return !v.pass; });
  std::cout << verdicts.size() - static_cast<std::size_t>(failed) << "/" << verdicts.size() << " criteria passed in "
            << fmt(since(t0), 5) << " s" << std::endl;
  return failed == 0 && verdicts.size() == 9 ? 0 : 1;
}
