#include "survcart/error.hpp"

namespace survcart {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidTime: return "InvalidTime";
    case ErrorCode::DegenerateComponent: return "DegenerateComponent";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::TooFewGroups: return "TooFewGroups";
    case ErrorCode::SingularInformation: return "SingularInformation";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TruthSchemaMismatch: return "TruthSchemaMismatch";
    case ErrorCode::SpecParseError: return "SpecParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace survcart
