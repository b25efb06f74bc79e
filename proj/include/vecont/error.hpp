#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vecont {

enum class ErrorCode {
  EmptyCorpus,
  DegenerateDimension,
  OutOfDomain,
  IndexOutOfRange,
  NoFeasibleResolution,
  InvalidOntology,
  ParseError,
  SchemaError,
  InvalidSpec,
  GenreAbsent,
  UnfittedProjector,
  MalformedJson,
  MissingDimension,
  EmptyCloud,
  InsufficientPoints,
  NegativeRadius,
  ZeroVector,
  DegenerateCovariance,
  DegenerateSample,
  ZeroVariance,
  TooFewPoints,
  InsufficientGenres,
  NetworkError,
  CacheMiss,
  ConfigError,
  MissingArtifact,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the toolkit; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vecont
