#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace semcom::corpus {

/// Generates parliament-proceedings style English lines from a fixed
/// template grammar. A small fraction of lines fall outside the 4..30 word
/// window (procedural interjections and run-on sentences) so that length
/// filtering has something to do.
std::vector<std::string> synthesize_lines(std::size_t n, std::uint64_t seed);

}  // namespace semcom::corpus
