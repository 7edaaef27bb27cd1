#pragma once

#include <stdexcept>
#include <string>

namespace ood3d {

// Error taxonomy maps onto the CLI exit codes: ConfigError -> 2,
// IoError -> 3, everything deriving from DataError -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

struct ParseError : DataError {
  using DataError::DataError;
};

struct SchemaError : DataError {
  using DataError::DataError;
};

struct MissingOodScore : DataError {
  using DataError::DataError;
};

struct EmptyPartition : DataError {
  using DataError::DataError;
};

struct DegenerateInput : DataError {
  using DataError::DataError;
};

struct EmptyLogits : DataError {
  using DataError::DataError;
};

struct MissingSamples : DataError {
  using DataError::DataError;
};

struct WidthMismatch : DataError {
  using DataError::DataError;
};

struct DegenerateDataset : DataError {
  using DataError::DataError;
};

struct NoMemberPoints : DataError {
  using DataError::DataError;
};

struct TooFewEligible : DataError {
  using DataError::DataError;
};

struct NoFreeSpace : DataError {
  using DataError::DataError;
};

struct OutOfBounds : DataError {
  using DataError::DataError;
};

}  // namespace ood3d
