#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wikisvd {

// Bad caller-supplied argument or unmet precondition.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Syntax error in an input file; carries the 1-based line number.
struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line(line) {}
  std::size_t line;
};

// Well-formed input that violates a data invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VersionError : FormatError {
  using FormatError::FormatError;
};

// A parameter became NaN or infinite during SGD.
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& block)
      : std::runtime_error("non-finite value in parameter block '" + block + "'"), block(block) {}
  std::string block;
};

}  // namespace wikisvd
