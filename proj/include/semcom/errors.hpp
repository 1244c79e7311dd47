#pragma once

#include <stdexcept>
#include <string>

namespace semcom {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyCorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Requested sizes or shapes do not fit the input.
struct SizeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Training produced a non-finite loss.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace semcom
