// Writes a synthetic parliament-style corpus, one sentence per line.
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "semcom/synth_corpus.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic parliamentary corpus"};
  std::size_t lines = 130000;
  std::uint64_t seed = 42;
  std::string out;
  app.add_option("--lines", lines, "number of lines")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--out", out, "output file")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  std::ofstream f(out);
  if (!f) {
    std::cerr << "cannot write " << out << '\n';
    return 2;
  }
  for (const auto& l : semcom::corpus::synthesize_lines(lines, seed)) f << l << '\n';
  return f ? 0 : 2;
}
