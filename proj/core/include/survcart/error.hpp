#pragma once

#include <stdexcept>
#include <string>

namespace survcart {

enum class ErrorCode {
  InvalidTime,
  DegenerateComponent,
  NonConvergence,
  SchemaMismatch,
  TooFewGroups,
  SingularInformation,
  EmptyInput,
  EmptyGroup,
  UnknownVariable,
  MissingValue,
  MissingColumn,
  ParseError,
  EmptyDataset,
  InvalidConfig,
  TruthSchemaMismatch,
  SpecParseError,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// CSV parse failure carrying the offending (1-based data) row and column.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::string column, const std::string& what)
      : Error(ErrorCode::ParseError, what), row_(row), column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

}  // namespace survcart
