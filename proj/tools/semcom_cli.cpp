// Command-line front end: prepare, train, sweep, modexp, gradcheck.
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "semcom/errors.hpp"
#include "semcom/experiment.hpp"

namespace ex = semcom::experiment;

int main(int argc, char** argv) {
  CLI::App app{"Semantic HARQ and learned-constellation link simulator"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--seed", seed, "global seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--workers", workers, "worker threads for sweeps")->check(CLI::PositiveNumber);

  auto* prepare = app.add_subcommand("prepare", "filter and split the corpus, build vocabulary, Huffman table and LDPC code");
  auto* train = app.add_subcommand("train", "train the semantic codec or the constellation");
  std::string target;
  train->add_option("target", target, "codec | constellation")->required();
  auto* sweep = app.add_subcommand("sweep", "HARQ success-rate sweep over SNR");
  auto* modexp = app.add_subcommand("modexp", "16-QAM versus trained constellation");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  auto* config_dump = app.add_subcommand("config", "print the effective configuration with all defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    ex::ExperimentConfig cfg = config_path.empty() ? ex::ExperimentConfig{} : ex::ExperimentConfig::load(config_path);
    if (seed) cfg.seed = *seed;
    if (out) cfg.out = *out;
    if (workers) cfg.workers = *workers;
    cfg.validate(false);

    if (config_dump->parsed()) {
      std::cout << cfg.to_json().dump(2) << '\n';
    } else if (prepare->parsed()) {
      ex::cmd_prepare(cfg, std::cout);
    } else if (train->parsed()) {
      ex::cmd_train(cfg, ex::parse_target(target), std::cout);
    } else if (sweep->parsed()) {
      ex::cmd_sweep(cfg, std::cout);
    } else if (modexp->parsed()) {
      ex::cmd_modexp(cfg, std::cout);
    } else if (gradcheck->parsed()) {
      if (!ex::cmd_gradcheck(cfg, std::cout).passed) return 2;
    }
  } catch (const ex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
