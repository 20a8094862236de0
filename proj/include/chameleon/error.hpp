#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chameleon {

enum class ErrorCode {
  MissingFile,
  FieldCountMismatch,
  UnresolvedReference,
  EncodingError,
  UnknownFamilyName,
  EmptyFamily,
  SyntaxError,
  MixedPairs,
  NoEligiblePairs,
  LengthMismatch,
  DegenerateVariance,
  TooFewValues,
  InvalidProbability,
  MissingMetadata,
  EmptyCell,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-checkable code plus a human message.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace chameleon
