#include "semcom/experiment.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "semcom/errors.hpp"
#include "semcom/link.hpp"
#include "semcom/similarity.hpp"

namespace semcom::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!keys.contains(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

json codec_train_to_json(const CodecTrainConfig& c) {
  return {{"model", c.codec.to_json()},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"flip_low", c.flip_low},
          {"flip_high", c.flip_high},
          {"keep_prob", c.keep_prob},
          {"holdout_fraction", c.holdout_fraction},
          {"max_sentences", c.max_sentences}};
}

void codec_train_from_json(const json& j, CodecTrainConfig& c, const std::string& where) {
  reject_unknown(j, {"model", "epochs", "batch_size", "learning_rate", "flip_low", "flip_high", "keep_prob",
                     "holdout_fraction", "max_sentences"},
                 where);
  if (j.contains("model")) {
    const auto& m = j.at("model");
    reject_unknown(m, {"max_len", "embed_dim", "hidden", "position_dim", "code_bits", "blocks", "vocab_size"},
                   where + ".model");
    json merged = c.codec.to_json();
    merged.update(m);
    c.codec = codec::CodecConfig::from_json(merged);
  }
  read(j, "epochs", c.epochs);
  read(j, "batch_size", c.batch_size);
  read(j, "learning_rate", c.learning_rate);
  read(j, "flip_low", c.flip_low);
  read(j, "flip_high", c.flip_high);
  read(j, "keep_prob", c.keep_prob);
  read(j, "holdout_fraction", c.holdout_fraction);
  read(j, "max_sentences", c.max_sentences);
}

void validate_codec_train(const CodecTrainConfig& c, const std::string& where) {
  auto probe = c.codec;
  probe.vocab_size = std::max(probe.vocab_size, 4);
  try {
    probe.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  if (c.epochs < 1 || c.batch_size < 1 || !(c.learning_rate > 0.0))
    throw ConfigError(where + ": epochs, batch_size and learning_rate must be positive");
  if (!(0.0 <= c.flip_low && c.flip_low <= c.flip_high && c.flip_high <= 0.5))
    throw ConfigError(where + ": need 0 <= flip_low <= flip_high <= 0.5");
  if (!(c.keep_prob > 0.0 && c.keep_prob <= 1.0)) throw ConfigError(where + ": keep_prob must be in (0, 1]");
  if (!(c.holdout_fraction >= 0.0 && c.holdout_fraction < 1.0))
    throw ConfigError(where + ": holdout_fraction must be in [0, 1)");
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingArtifact("missing artifact: " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path().empty() ? fs::path(".") : p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::vector<std::size_t> read_manifest(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::vector<std::size_t> out;
  std::size_t v = 0;
  while (in >> v) out.push_back(v);
  return out;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const auto w = static_cast<std::size_t>(std::max(1, workers));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < w; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += w) fn(i);
    });
  for (auto& th : pool) th.join();
}

std::vector<std::vector<int>> training_ids(const Prepared& p, std::size_t max_sentences) {
  const std::size_t n = max_sentences == 0 ? p.split.train.size() : std::min(max_sentences, p.split.train.size());
  std::vector<std::vector<int>> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(p.vocab.encode(p.split.train[i].tokens));
  return ids;
}

codec::TrainOptions train_options(const CodecTrainConfig& c, std::uint64_t seed) {
  codec::TrainOptions o;
  o.epochs = c.epochs;
  o.batch_size = c.batch_size;
  o.learning_rate = c.learning_rate;
  o.seed = seed;
  o.flip_low = c.flip_low;
  o.flip_high = c.flip_high;
  o.keep_prob = c.keep_prob;
  o.holdout_fraction = c.holdout_fraction;
  return o;
}

codec::SemanticModel run_codec_training(const CodecTrainConfig& c, const Prepared& p, std::uint64_t seed,
                                        const fs::path& loss_csv, std::ostream& log) {
  auto cc = c.codec;
  cc.vocab_size = p.vocab.size();
  auto opts = train_options(c, seed);
  std::ostringstream csv;
  csv << "epoch,train_loss,holdout_loss\n";
  opts.on_epoch = [&](int epoch, double tr, double ho) {
    csv << epoch << ',' << harq::format_real(tr) << ',' << harq::format_real(ho) << '\n';
    log << "epoch " << epoch << " train_loss " << tr << " holdout_loss " << ho << std::endl;
  };
  auto result = codec::train_codec(training_ids(p, c.max_sentences), cc, opts);
  write_file(loss_csv, csv.str());
  log << "best epoch " << result.best_epoch << std::endl;
  return std::move(result.model);
}

codec::SemanticModel load_codec(const fs::path& p) {
  if (!fs::exists(p)) throw MissingArtifact("missing artifact: " + p.string());
  return codec::SemanticModel::from_checkpoint(nn::Checkpoint::load(p));
}

std::vector<std::vector<std::string>> test_sentences(const Prepared& p, std::size_t n) {
  if (n > p.split.test.size()) {
    std::ostringstream os;
    os << "requested " << n << " sentences but the test split has " << p.split.test.size();
    throw ConfigError(os.str());
  }
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(p.split.test[i].tokens);
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  constellation.codec.codec.code_bits = 320;
  constellation.codec.codec.blocks = 1;
  constellation.codec.keep_prob = 1.0;
  // trained close to convergence so that the joint stage compares modulations, not codec budgets
  constellation.codec.epochs = 30;
}

json ExperimentConfig::to_json() const {
  json j;
  j["corpus"] = {{"path", corpus.path},         {"min_words", corpus.min_words}, {"max_words", corpus.max_words},
                 {"n_train", corpus.n_train},   {"n_test", corpus.n_test},       {"split_seed", corpus.split_seed},
                 {"vocab_max", corpus.vocab_max}};
  j["codec"] = codec_train_to_json(codec);
  j["constellation"] = {{"codec", codec_train_to_json(constellation.codec)},
                        {"snr_train_db", constellation.snr_train_db},
                        {"epochs", constellation.epochs},
                        {"batch_size", constellation.batch_size},
                        {"learning_rate", constellation.learning_rate},
                        {"codec_learning_rate", constellation.codec_learning_rate},
                        {"joint", constellation.joint},
                        {"init_qam", constellation.init_qam},
                        {"max_sentences", constellation.max_sentences}};
  j["ofdm"] = {{"subcarriers", ofdm.subcarriers}, {"symbols", ofdm.symbols},
               {"cyclic_prefix", ofdm.cyclic_prefix}, {"taps", ofdm.taps},
               {"decay_db_per_tap", ofdm.decay_db_per_tap}, {"pilot_seed", ofdm.pilot_seed}};
  j["ldpc"] = {{"n", ldpc.n},       {"k", ldpc.k}, {"column_weight", ldpc.column_weight}, {"seed", ldpc.seed},
               {"max_iters", ldpc.max_iters}, {"puncture", ldpc.puncture}};
  j["harq"] = {{"schemes", harq.schemes},
               {"conventional_rounds", harq.conventional_rounds},
               {"scharq_rounds", harq.scharq_rounds},
               {"initial_blocks", harq.initial_blocks}};
  j["sweep"] = {{"snr_db", sweep.snr_db}, {"sentences", sweep.sentences}};
  j["modexp"] = {{"snr_db", modexp.snr_db}, {"sentences", modexp.sentences}};
  j["out"] = out;
  j["seed"] = seed;
  j["workers"] = workers;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  reject_unknown(j, {"corpus", "codec", "constellation", "ofdm", "ldpc", "harq", "sweep", "modexp", "out", "seed", "workers"},
                 "config");
  if (j.contains("corpus")) {
    const auto& s = j.at("corpus");
    reject_unknown(s, {"path", "min_words", "max_words", "n_train", "n_test", "split_seed", "vocab_max"}, "corpus");
    read(s, "path", c.corpus.path);
    read(s, "min_words", c.corpus.min_words);
    read(s, "max_words", c.corpus.max_words);
    read(s, "n_train", c.corpus.n_train);
    read(s, "n_test", c.corpus.n_test);
    read(s, "split_seed", c.corpus.split_seed);
    read(s, "vocab_max", c.corpus.vocab_max);
  }
  if (j.contains("codec")) codec_train_from_json(j.at("codec"), c.codec, "codec");
  if (j.contains("constellation")) {
    const auto& s = j.at("constellation");
    reject_unknown(s, {"codec", "snr_train_db", "epochs", "batch_size", "learning_rate", "codec_learning_rate", "joint",
                       "init_qam", "max_sentences"},
                   "constellation");
    if (s.contains("codec")) codec_train_from_json(s.at("codec"), c.constellation.codec, "constellation.codec");
    read(s, "snr_train_db", c.constellation.snr_train_db);
    read(s, "epochs", c.constellation.epochs);
    read(s, "batch_size", c.constellation.batch_size);
    read(s, "learning_rate", c.constellation.learning_rate);
    read(s, "codec_learning_rate", c.constellation.codec_learning_rate);
    read(s, "joint", c.constellation.joint);
    read(s, "init_qam", c.constellation.init_qam);
    read(s, "max_sentences", c.constellation.max_sentences);
  }
  if (j.contains("ofdm")) {
    const auto& s = j.at("ofdm");
    reject_unknown(s, {"subcarriers", "symbols", "cyclic_prefix", "taps", "decay_db_per_tap", "pilot_seed"}, "ofdm");
    read(s, "subcarriers", c.ofdm.subcarriers);
    read(s, "symbols", c.ofdm.symbols);
    read(s, "cyclic_prefix", c.ofdm.cyclic_prefix);
    read(s, "taps", c.ofdm.taps);
    read(s, "decay_db_per_tap", c.ofdm.decay_db_per_tap);
    read(s, "pilot_seed", c.ofdm.pilot_seed);
  }
  if (j.contains("ldpc")) {
    const auto& s = j.at("ldpc");
    reject_unknown(s, {"n", "k", "column_weight", "seed", "max_iters", "puncture"}, "ldpc");
    read(s, "n", c.ldpc.n);
    read(s, "k", c.ldpc.k);
    read(s, "column_weight", c.ldpc.column_weight);
    read(s, "seed", c.ldpc.seed);
    read(s, "max_iters", c.ldpc.max_iters);
    read(s, "puncture", c.ldpc.puncture);
  }
  if (j.contains("harq")) {
    const auto& s = j.at("harq");
    reject_unknown(s, {"schemes", "conventional_rounds", "scharq_rounds", "initial_blocks"}, "harq");
    read(s, "schemes", c.harq.schemes);
    read(s, "conventional_rounds", c.harq.conventional_rounds);
    read(s, "scharq_rounds", c.harq.scharq_rounds);
    read(s, "initial_blocks", c.harq.initial_blocks);
  }
  for (auto [key, target] : {std::pair{"sweep", &c.sweep}, std::pair{"modexp", &c.modexp}}) {
    if (!j.contains(key)) continue;
    const auto& s = j.at(key);
    reject_unknown(s, {"snr_db", "sentences"}, key);
    read(s, "snr_db", target->snr_db);
    read(s, "sentences", target->sentences);
  }
  read(j, "out", c.out);
  read(j, "seed", c.seed);
  read(j, "workers", c.workers);
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void ExperimentConfig::validate(bool need_corpus) const {
  if (need_corpus) {
    if (corpus.path.empty()) throw ConfigError("corpus.path is not set");
    if (!fs::is_regular_file(corpus.path)) throw MissingArtifact("corpus file not found: " + corpus.path);
  }
  if (corpus.min_words < 1 || corpus.max_words < corpus.min_words) throw ConfigError("corpus: bad word bounds");
  if (corpus.n_train == 0 || corpus.n_test == 0) throw ConfigError("corpus: split sizes must be positive");
  if (corpus.vocab_max < 4) throw ConfigError("corpus: vocab_max must be at least 4");
  validate_codec_train(codec, "codec");
  validate_codec_train(constellation.codec, "constellation.codec");
  if (codec.codec.max_len < corpus.max_words || constellation.codec.codec.max_len < corpus.max_words)
    throw ConfigError("codec max_len must cover corpus.max_words");
  if (constellation.epochs < 1 || constellation.batch_size < 1 || !(constellation.learning_rate > 0.0) ||
      !(constellation.codec_learning_rate > 0.0))
    throw ConfigError("constellation: epochs, batch_size and learning rates must be positive");
  try {
    ofdm.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("ofdm: ") + e.what());
  }
  if (ldpc.k < 1 || ldpc.n <= ldpc.k || ldpc.max_iters < 1) throw ConfigError("ldpc: bad dimensions");
  if (ldpc.puncture.empty() || ldpc.puncture.back() != ldpc.n || ldpc.puncture.front() < ldpc.k ||
      !std::is_sorted(ldpc.puncture.begin(), ldpc.puncture.end()) ||
      std::adjacent_find(ldpc.puncture.begin(), ldpc.puncture.end()) != ldpc.puncture.end())
    throw ConfigError("ldpc: puncture schedule must increase from >= K to N");
  if (harq.schemes.empty()) throw ConfigError("harq: scheme list is empty");
  (void)policies();
  for (const auto* s : {&sweep, &modexp}) {
    if (s->snr_db.empty()) throw ConfigError("snr list is empty");
    for (double v : s->snr_db)
      if (!std::isfinite(v)) throw ConfigError("snr values must be finite");
    if (s->sentences == 0) throw ConfigError("sentence count must be positive");
  }
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (out.empty()) throw ConfigError("out directory is empty");
}

std::vector<harq::HarqPolicy> ExperimentConfig::policies() const {
  std::vector<harq::HarqPolicy> out;
  for (const auto& name : harq.schemes) {
    harq::HarqPolicy p;
    try {
      p = harq::HarqPolicy::parse(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (p.scheme == harq::Scheme::conventional) {
      p.max_rounds = harq.conventional_rounds;
    } else {
      p.max_rounds = harq.scharq_rounds;
      p.initial_blocks = harq.initial_blocks;
    }
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    out.push_back(p);
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  const std::string data = read_file(path);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

void update_manifest(const ExperimentConfig& cfg, const std::string& stage, double seconds,
                     const std::vector<std::string>& artifacts) {
  const fs::path p = fs::path(cfg.out) / files::kManifest;
  json m = json::object();
  if (fs::exists(p)) {
    try {
      m = json::parse(read_file(p));
    } catch (const json::exception&) {
      m = json::object();
    }
  }
  m["tool_version"] = kToolVersion;
  m["config"] = cfg.to_json();
  m["stages"][stage]["wall_clock_seconds"] = seconds;
  for (const auto& a : artifacts) m["artifacts"][a] = sha256_file(fs::path(cfg.out) / a);
  write_file(p, m.dump(2) + "\n");
}

PrepareSummary cmd_prepare(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate(true);
  const auto t0 = std::chrono::steady_clock::now();
  const auto loaded = corpus::load_corpus(cfg.corpus.path, cfg.corpus.min_words, cfg.corpus.max_words);
  if (loaded.sentences.empty()) throw EmptyCorpusError("no sentences survive filtering in " + cfg.corpus.path);
  const auto split = corpus::split_corpus(loaded.sentences, cfg.corpus.n_train, cfg.corpus.n_test, cfg.corpus.split_seed);
  const auto vocab = corpus::build_vocab(split.train, cfg.corpus.vocab_max);
  std::vector<std::string> texts;
  texts.reserve(split.train.size());
  for (const auto& s : split.train) texts.push_back(s.text());
  const auto table = huffman::build_table(huffman::char_frequencies(texts));
  const auto code = fec::LdpcCode::construct(cfg.ldpc.seed, cfg.ldpc.n, cfg.ldpc.k, cfg.ldpc.column_weight);

  const fs::path out(cfg.out);
  write_file(out / files::kTrainSplit, corpus::split_manifest(split.train));
  write_file(out / files::kTestSplit, corpus::split_manifest(split.test));
  write_file(out / files::kVocab, vocab.serialize());
  write_file(out / files::kHuffman, table.serialize());
  write_file(out / files::kLdpc, code.serialize());
  update_manifest(cfg, "prepare", seconds_since(t0),
                  {files::kTrainSplit, files::kTestSplit, files::kVocab, files::kHuffman, files::kLdpc});

  PrepareSummary s{loaded.sentences.size(), loaded.dropped, split.train.size(), split.test.size()};
  log << "retained " << s.retained << " dropped " << s.dropped << " train " << s.n_train << " test " << s.n_test
      << " vocab " << vocab.size() << std::endl;
  return s;
}

Prepared load_prepared(const ExperimentConfig& cfg) {
  cfg.validate(true);
  const fs::path out(cfg.out);
  Prepared p;
  const auto train_lines = read_manifest(out / files::kTrainSplit);
  const auto test_lines = read_manifest(out / files::kTestSplit);
  p.vocab = corpus::Vocab::deserialize(read_file(out / files::kVocab));
  p.table = huffman::HuffmanTable::deserialize(read_file(out / files::kHuffman));
  p.code = fec::LdpcCode::deserialize(read_file(out / files::kLdpc));

  const auto loaded = corpus::load_corpus(cfg.corpus.path, cfg.corpus.min_words, cfg.corpus.max_words);
  std::unordered_map<std::size_t, std::size_t> by_line;
  for (std::size_t i = 0; i < loaded.sentences.size(); ++i) by_line.emplace(loaded.sentences[i].line, i);
  auto pick = [&](const std::vector<std::size_t>& lines, std::vector<corpus::Sentence>& dst) {
    for (auto line : lines) {
      const auto it = by_line.find(line);
      if (it == by_line.end())
        throw MissingArtifact("split manifest refers to line " + std::to_string(line) + " which is not a kept sentence");
      dst.push_back(loaded.sentences[it->second]);
    }
  };
  pick(train_lines, p.split.train);
  pick(test_lines, p.split.test);
  p.split.seed = cfg.corpus.split_seed;
  return p;
}

TrainTarget parse_target(const std::string& name) {
  if (name == "codec") return TrainTarget::codec;
  if (name == "constellation") return TrainTarget::constellation;
  throw ConfigError("unknown training target '" + name + "' (expected codec or constellation)");
}

void cmd_train(const ExperimentConfig& cfg, TrainTarget target, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto prepared = load_prepared(cfg);
  const fs::path out(cfg.out);
  if (target == TrainTarget::codec) {
    const auto model =
        run_codec_training(cfg.codec, prepared, derive_seed(cfg.seed, hash_label("codec")), out / files::kCodecLoss, log);
    write_file(out / files::kCodec, model.to_checkpoint().to_string());
    update_manifest(cfg, "train_codec", seconds_since(t0), {files::kCodec, files::kCodecLoss});
    return;
  }

  const auto& cc = cfg.constellation;
  if (cc.codec.codec.code_bits % mod::kBitsPerSymbol != 0 || cc.codec.codec.blocks != 1)
    throw ConfigError("constellation.codec must be a single block with a multiple of 4 bits");
  log << "training the bit-flip codec" << std::endl;
  const auto base = run_codec_training(cc.codec, prepared, derive_seed(cfg.seed, hash_label("codec-b320")),
                                       out / files::kModCodecLoss, log);
  write_file(out / files::kModCodec, base.to_checkpoint().to_string());

  mod::ConstellationTrainOptions opts;
  opts.snr_train_db = cc.snr_train_db;
  opts.epochs = cc.epochs;
  opts.batch_size = cc.batch_size;
  opts.learning_rate = cc.learning_rate;
  opts.codec_learning_rate = cc.codec_learning_rate;
  opts.joint = cc.joint;
  opts.init_qam = cc.init_qam;
  opts.seed = derive_seed(cfg.seed, hash_label("constellation"));
  std::ostringstream csv;
  opts.on_epoch = [&](int epoch, double loss, double power_error) {
    csv << epoch << ',' << harq::format_real(loss) << ',' << harq::format_real(power_error) << '\n';
    log << "constellation epoch " << epoch << " loss " << loss << std::endl;
  };
  log << "training the constellation" << (cc.joint ? " jointly with the codec" : "") << std::endl;
  const auto result = mod::train_constellation(base, training_ids(prepared, cc.max_sentences), opts);
  const std::string body = "epoch,loss,max_power_error\n0," + harq::format_real(result.initial_loss) + ",0\n" + csv.str();
  write_file(out / files::kConstellationLoss, body);
  write_file(out / files::kConstellation, result.constellation.to_json().dump(2) + "\n");
  write_file(out / files::kJointCodec, result.model.to_checkpoint().to_string());
  // reload check: the stored file must pass the unit-power validation
  mod::Constellation::from_json(json::parse(read_file(out / files::kConstellation)));
  log << "initial loss " << result.initial_loss << " final loss " << result.epoch_loss.back() << " max power error "
      << result.max_power_error << std::endl;
  update_manifest(cfg, "train_constellation", seconds_since(t0),
                  {files::kModCodec, files::kModCodecLoss, files::kConstellation, files::kConstellationLoss,
                   files::kJointCodec});
}

harq::SweepTable cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto policies = cfg.policies();
  const auto prepared = load_prepared(cfg);
  const fs::path out(cfg.out);
  const bool need_codec = std::any_of(policies.begin(), policies.end(),
                                      [](const auto& p) { return p.scheme == harq::Scheme::scharq; });
  codec::SemanticModel model;
  if (need_codec) model = load_codec(out / files::kCodec);

  harq::ConventionalContext conv;
  conv.code = &prepared.code;
  conv.schedule.cumulative = cfg.ldpc.puncture;
  conv.table = &prepared.table;
  conv.ofdm = cfg.ofdm;
  conv.max_iters = cfg.ldpc.max_iters;
  harq::ScharqContext sch{&model, &prepared.vocab, cfg.ofdm};
  const harq::SweepContext ctx{&conv, need_codec ? &sch : nullptr};

  const auto sentences = test_sentences(prepared, cfg.sweep.sentences);
  const auto table = harq::sweep(policies, cfg.sweep.snr_db, sentences, ctx, derive_seed(cfg.seed, hash_label("sweep")),
                                 cfg.workers);
  write_file(out / files::kSweep, harq::to_csv(table));
  for (const auto& r : table)
    log << r.scheme << " snr " << r.snr_db << " success " << r.success_rate << " [" << r.wilson.low << ", "
        << r.wilson.high << "] bits " << r.mean_bits << std::endl;
  update_manifest(cfg, "sweep", seconds_since(t0), {files::kSweep});
  return table;
}

double paired_one_sided_p(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("paired_one_sided_p: need equal sizes >= 2");
  const double n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double var = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) var += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  var /= n - 1.0;
  if (var == 0.0) return mean > 0.0 ? 0.0 : 1.0;
  const double z = mean / std::sqrt(var / n);
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

std::vector<ModexpRow> modexp(const codec::SemanticModel& qam_codec, const codec::SemanticModel& trained_codec,
                              const mod::Constellation& trained, const corpus::Vocab& vocab,
                              const std::vector<std::vector<std::string>>& sentences, const std::vector<double>& snrs,
                              const ofdm::OfdmConfig& ofdm, std::uint64_t seed, int workers) {
  for (const auto* m : {&qam_codec, &trained_codec})
    if (m->config().blocks != 1 || m->config().code_bits % mod::kBitsPerSymbol != 0)
      throw ConfigError("modexp: codecs must produce a single block of whole symbols");
  const auto n = sentences.size();
  std::vector<ModexpRow> rows;
  for (double snr : snrs) {
    std::vector<double> sq(n), st(n);
    const auto snr_key = static_cast<std::uint64_t>(std::llround(snr * 1000.0));
    parallel_for(n, workers, [&](std::size_t i) {
      const auto ids = vocab.encode(sentences[i]);
      const auto reference = vocab.decode(ids);
      auto run = [&](const codec::SemanticModel& m, const mod::Constellation& c) {
        // same seed for both paths: identical channel and noise draws
        Rng rng(derive_seed(seed, hash_label("modexp"), snr_key, i));
        const auto blocks = codec::encode_semantic(m, ids);
        const auto rx = link::transmit(blocks[0].bits, c, ofdm, snr, rng);
        const std::vector<codec::CodewordBlock> got{{1, rx.hard.slice(0, blocks[0].bits.size())}};
        return similarity::sim_edit(vocab.decode(codec::decode_semantic(m, got).ids), reference);
      };
      sq[i] = run(qam_codec, mod::qam16_gray());
      st[i] = run(trained_codec, trained);
    });
    const double p = n >= 2 ? paired_one_sided_p(st, sq) : 1.0;
    for (auto [name, v] : {std::pair{"qam16", &sq}, std::pair{"trained", &st}}) {
      ModexpRow r;
      r.snr_db = snr;
      r.modulation = name;
      r.n = n;
      r.seed = seed;
      r.p_trained_better = p;
      double m = 0.0;
      for (double x : *v) m += x;
      m = n ? m / static_cast<double>(n) : 0.0;
      double var = 0.0;
      for (double x : *v) var += (x - m) * (x - m);
      r.mean_similarity = m;
      r.std_similarity = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
      rows.push_back(r);
    }
  }
  return rows;
}

std::string modexp_csv(const std::vector<ModexpRow>& rows) {
  std::ostringstream os;
  os << kModexpCsvHeader << '\n';
  for (const auto& r : rows)
    os << harq::format_real(r.snr_db) << ',' << r.modulation << ',' << harq::format_real(r.mean_similarity) << ','
       << harq::format_real(r.std_similarity) << ',' << r.n << ',' << harq::format_real(r.p_trained_better) << ','
       << r.seed << '\n';
  return os.str();
}

std::vector<ModexpRow> cmd_modexp(const ExperimentConfig& cfg, std::ostream& log) {
  const auto& mc = cfg.constellation.codec.codec;
  if (mc.code_bits != 320 || mc.blocks != 1)
    throw ConfigError("modexp requires the single-block B=320 codec (80 symbols per sentence)");
  const auto t0 = std::chrono::steady_clock::now();
  const auto prepared = load_prepared(cfg);
  const fs::path out(cfg.out);
  const auto qam_codec = load_codec(out / files::kModCodec);
  const auto joint_codec = load_codec(out / files::kJointCodec);
  for (const auto* m : {&qam_codec, &joint_codec})
    if (m->config().code_bits != 320 || m->config().blocks != 1)
      throw ConfigError("stored modulation-experiment codec is not B=320");
  const auto trained = mod::Constellation::from_json(json::parse(read_file(out / files::kConstellation)));

  const auto rows = modexp(qam_codec, joint_codec, trained, prepared.vocab, test_sentences(prepared, cfg.modexp.sentences),
                           cfg.modexp.snr_db, cfg.ofdm, derive_seed(cfg.seed, hash_label("modexp")), cfg.workers);
  write_file(out / files::kModexp, modexp_csv(rows));
  auto scatter = trained.to_json();
  scatter["nearest_neighbor_ratio"] = mod::nearest_neighbor_ratio(trained);
  scatter["pairwise_distance_variance"] = mod::pairwise_distance_variance(trained);
  write_file(out / files::kScatter, scatter.dump(2) + "\n");
  for (const auto& r : rows)
    log << r.modulation << " snr " << r.snr_db << " mean similarity " << r.mean_similarity << std::endl;
  update_manifest(cfg, "modexp", seconds_since(t0), {files::kModexp, files::kScatter});
  return rows;
}

GradcheckSummary cmd_gradcheck(const ExperimentConfig& cfg, std::ostream& log) {
  GradcheckSummary s;
  Rng rng(derive_seed(cfg.seed, hash_label("gradcheck")));
  const std::vector<std::vector<int>> batch{{4, 5, 6, 7}, {8, 4, 9}, {5, 5, 6, 7, 8, 9}};

  codec::CodecConfig small{6, 4, 8, 4, 12, 3, 10};
  codec::SemanticModel model(small, cfg.seed);
  const auto channel = codec::sample_channel(small, static_cast<int>(batch.size()), 0.2, 0.7, rng);
  nn::GradCheckOptions opts;
  opts.coordinates = 400;
  opts.seed = cfg.seed;
  const auto r1 = nn::gradient_check(
      model.params(), [&](bool bw) { return codec::codec_loss(model, batch, channel, codec::Quantizer::soft, bw); }, opts);
  log << "codec soft path: max relative error " << r1.max_relative_error << " over " << r1.checked << " coordinates"
      << std::endl;

  codec::CodecConfig single{6, 4, 8, 4, 8, 1, 10};
  codec::SemanticModel e2e_model(single, cfg.seed + 1);
  mod::Mapper mapper(cfg.seed);
  const double nv = 0.3;
  const auto noise = mod::sample_noise(static_cast<Eigen::Index>(batch.size()), 2, nv, rng);
  auto e2e = [&](bool bw) {
    return mod::e2e_loss(mapper, e2e_model, batch, noise, nv, codec::Quantizer::soft, bw, true);
  };
  const auto r2 = nn::gradient_check(mapper.params(), [&](bool bw) {
    nn::zero_grad(e2e_model.params());
    return e2e(bw);
  }, opts);
  const auto r3 = nn::gradient_check(e2e_model.params(), [&](bool bw) {
    nn::zero_grad(mapper.params());
    return e2e(bw);
  }, opts);
  log << "mapper path: max relative error " << std::max(r2.max_relative_error, r3.max_relative_error) << " over "
      << r2.checked + r3.checked << " coordinates" << std::endl;

  s.max_relative_error = std::max({r1.max_relative_error, r2.max_relative_error, r3.max_relative_error});
  s.checked = static_cast<std::size_t>(r1.checked + r2.checked + r3.checked);
  s.passed = s.max_relative_error < 1e-4;
  log << (s.passed ? "gradient check passed" : "gradient check FAILED") << std::endl;
  return s;
}

}  // namespace semcom::experiment
