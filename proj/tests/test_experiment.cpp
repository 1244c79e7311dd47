#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "semcom/experiment.hpp"
#include "semcom/synth_corpus.hpp"

namespace fs = std::filesystem;
using namespace semcom;
using namespace semcom::experiment;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("semcom_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Tiny but complete configuration over a 200-line synthetic corpus.
ExperimentConfig tiny_config(const fs::path& dir) {
  {
    std::ofstream out(dir / "corpus.txt");
    for (const auto& line : corpus::synthesize_lines(200, 3)) out << line << '\n';
  }
  ExperimentConfig cfg;
  cfg.corpus.path = (dir / "corpus.txt").string();
  cfg.corpus.n_train = 100;
  cfg.corpus.n_test = 50;
  cfg.codec.codec.hidden = 32;
  cfg.codec.codec.embed_dim = 8;
  cfg.codec.codec.position_dim = 8;
  cfg.codec.epochs = 2;
  cfg.sweep = {{2.0, 20.0}, 6};
  cfg.out = (dir / "out").string();
  return cfg;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SEMCOM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, DefaultsEchoAndRoundTrip) {
  const ExperimentConfig cfg;
  const auto j = cfg.to_json();
  EXPECT_EQ(j.at("codec").at("model").at("code_bits"), 960);
  EXPECT_EQ(j.at("codec").at("model").at("blocks"), 6);
  EXPECT_EQ(j.at("constellation").at("codec").at("model").at("code_bits"), 320);
  EXPECT_EQ(j.at("ldpc").at("puncture"), nlohmann::json({736, 1104, 1472}));
  EXPECT_EQ(j.at("ofdm").at("subcarriers"), 64);
  EXPECT_EQ(ExperimentConfig::from_json(j).to_json(), j);
  EXPECT_EQ(ExperimentConfig::from_json(nlohmann::json::object()).to_json(), j);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(ExperimentConfig::from_json({{"colour", 1}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json({{"codec", {{"epochz", 1}}}}), ConfigError);
  auto cfg = ExperimentConfig{};
  cfg.codec.codec.code_bits = 1200;
  cfg.codec.codec.blocks = 6;
  EXPECT_THROW(cfg.validate(false), ConfigError);
  cfg = ExperimentConfig{};
  cfg.harq.schemes = {"bogus"};
  EXPECT_THROW(cfg.validate(false), ConfigError);
  cfg = ExperimentConfig{};
  cfg.corpus.path = "/nonexistent/corpus.txt";
  EXPECT_THROW(cfg.validate(true), std::runtime_error);
  EXPECT_THROW(parse_target("mapper"), ConfigError);
}

TEST(Paired, OneSidedP) {
  std::vector<double> a(100, 0.6), b(100, 0.5);
  for (std::size_t i = 0; i < 100; ++i) a[i] += (i % 2 ? 0.01 : -0.01);
  EXPECT_LT(paired_one_sided_p(a, b), 1e-6);
  EXPECT_GT(paired_one_sided_p(b, a), 0.999);
  EXPECT_GE(paired_one_sided_p(b, b), 0.5);
}

TEST(Pipeline, PrepareTrainSweepAreReproducible) {
  const auto dir = scratch("pipeline");
  const auto cfg = tiny_config(dir);
  std::ostringstream log;
  const auto s = cmd_prepare(cfg, log);
  EXPECT_EQ(s.n_train, 100u);
  EXPECT_EQ(s.n_test, 50u);
  EXPECT_EQ(s.retained + s.dropped, 200u);
  EXPECT_NE(log.str().find("retained"), std::string::npos);
  const fs::path out = cfg.out;
  const std::string prepared[] = {files::kTrainSplit, files::kTestSplit, files::kVocab, files::kHuffman, files::kLdpc};
  std::vector<std::string> first;
  for (const auto& f : prepared) first.push_back(slurp(out / f));

  EXPECT_THROW(cmd_sweep(cfg, log), MissingArtifact);

  cmd_train(cfg, TrainTarget::codec, log);
  const auto codec1 = slurp(out / files::kCodec);
  const auto sweep1 = to_csv(cmd_sweep(cfg, log));
  EXPECT_EQ(slurp(out / files::kSweep), sweep1);
  EXPECT_EQ(std::count(sweep1.begin(), sweep1.end(), '\n'), 7);

  const auto manifest = nlohmann::json::parse(slurp(out / files::kManifest));
  EXPECT_EQ(manifest.at("artifacts").at(files::kCodec), sha256_file(out / files::kCodec));

  fs::remove_all(out);
  cmd_prepare(cfg, log);
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(slurp(out / prepared[i]), first[i]) << prepared[i];
  cmd_train(cfg, TrainTarget::codec, log);
  EXPECT_EQ(slurp(out / files::kCodec), codec1);
  EXPECT_EQ(to_csv(cmd_sweep(cfg, log)), sweep1);
}

TEST(Gradcheck, Passes) {
  std::ostringstream log;
  const auto r = cmd_gradcheck(ExperimentConfig{}, log);
  EXPECT_TRUE(r.passed);
  EXPECT_LT(r.max_relative_error, 1e-4);
  EXPECT_GT(r.checked, 0u);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  auto cfg = tiny_config(dir);
  {
    std::ofstream(dir / "good.json") << cfg.to_json().dump(2);
    std::ofstream(dir / "bad.json") << R"({"unknown_key": 3})";
    std::ofstream(dir / "broken.json") << "{ not json";
  }
  EXPECT_EQ(run_cli("config"), 0);
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("fly"), 1);
  EXPECT_EQ(run_cli("--config " + (dir / "bad.json").string() + " prepare"), 1);
  EXPECT_EQ(run_cli("--config " + (dir / "broken.json").string() + " prepare"), 1);
  EXPECT_EQ(run_cli("--config " + (dir / "good.json").string() + " train mapper"), 1);
  EXPECT_EQ(run_cli("--config " + (dir / "good.json").string() + " sweep"), 2);
  EXPECT_EQ(run_cli("--config " + (dir / "good.json").string() + " prepare"), 0);
  EXPECT_TRUE(fs::exists(fs::path(cfg.out) / files::kVocab));
  EXPECT_EQ(run_cli("--config " + (dir / "good.json").string() + " --out " + (dir / "elsewhere").string() + " sweep"), 2);
}
