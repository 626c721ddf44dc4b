// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace radarseg {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tensor dimension / rank mismatch. Messages name both offending shapes.
struct ShapeError : Error {
  using Error::Error;
};

/// Malformed input file content. Carries the 1-based line number.
struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t line_no)
      : Error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
  std::size_t line;
};

/// Structurally invalid data: non-increasing frame indices, bad split
/// fractions, empty datasets, label/partition length mismatches.
struct DataError : Error {
  using Error::Error;
};

/// File could not be opened or written.
struct IoError : Error {
  using Error::Error;
};

/// Non-finite value where training cannot continue (NaN/Inf loss).
struct NumericError : Error {
  using Error::Error;
};

}  // namespace radarseg
