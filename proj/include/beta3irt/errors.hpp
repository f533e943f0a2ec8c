#pragma once

#include <stdexcept>
#include <string>

namespace beta3irt {

/// Base class of all errors thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Model-domain or numerical failures (CLI exit code 4).
struct NumericalError : Error {
  using Error::Error;
};

/// Flat ICC (a = 0) cannot be inverted for ability.
struct ZeroDiscrimination : NumericalError {
  using NumericalError::NumericalError;
};

/// A response sits on the closed boundary {0, 1} where the Beta density degenerates.
struct DegenerateResponse : NumericalError {
  using NumericalError::NumericalError;
};

/// Malformed inputs, bad files, broken invariants (CLI exit code 3).
struct DataError : Error {
  using Error::Error;
};

struct InvalidParameter : DataError {
  using DataError::DataError;
};

struct LengthMismatch : DataError {
  using DataError::DataError;
};

struct IndexOutOfRange : DataError {
  using DataError::DataError;
};

struct TooFewPairs : DataError {
  using DataError::DataError;
};

struct ZeroVariance : DataError {
  using DataError::DataError;
};

struct InsufficientData : DataError {
  using DataError::DataError;
};

/// File-level parse failure; message carries 1-based line (and column where known).
struct ParseError : DataError {
  using DataError::DataError;
};

struct FormatError : DataError {
  using DataError::DataError;
};

struct FamilyMismatch : DataError {
  using DataError::DataError;
};

struct IoError : DataError {
  using DataError::DataError;
};

/// Option combination the tool does not support (CLI exit code 2).
struct UnsupportedCombination : Error {
  using Error::Error;
};

}  // namespace beta3irt
