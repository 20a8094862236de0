#include "chameleon/error.hpp"

namespace chameleon {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "missing file";
    case ErrorCode::FieldCountMismatch: return "field count mismatch";
    case ErrorCode::UnresolvedReference: return "unresolved reference";
    case ErrorCode::EncodingError: return "encoding error";
    case ErrorCode::UnknownFamilyName: return "unknown marker family";
    case ErrorCode::EmptyFamily: return "empty marker family";
    case ErrorCode::SyntaxError: return "syntax error";
    case ErrorCode::MixedPairs: return "mixed speaker pairs";
    case ErrorCode::NoEligiblePairs: return "no eligible pairs";
    case ErrorCode::LengthMismatch: return "length mismatch";
    case ErrorCode::DegenerateVariance: return "degenerate variance";
    case ErrorCode::TooFewValues: return "too few values";
    case ErrorCode::InvalidProbability: return "invalid probability";
    case ErrorCode::MissingMetadata: return "missing metadata";
    case ErrorCode::EmptyCell: return "empty cell";
    case ErrorCode::InvalidConfig: return "invalid configuration";
  }
  return "error";
}

}  // namespace chameleon
