#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace causalft {

enum class ErrorCode {
  MissingHeader,
  SchemaMismatch,
  NonBinaryLabel,
  EmptyData,
  UnknownFeature,
  InvalidArgument,
  ConfigInvalid,
  WidthMismatch,
  InsufficientRows,
  DegenerateColumn,
  UnknownNode,
  NotDirectlyRelevant,
  EmptyDomain,
  NoDirectFeature,
  NodeSetMismatch,
  IndexCollision,
  EmptySuite,
  MissingGroup,
  TooFewSamples,
  EmptySample,
  IOError,
  ParseError,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; code() identifies the
// contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace causalft
