#include "vecont/error.hpp"

namespace vecont {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DegenerateDimension: return "DegenerateDimension";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NoFeasibleResolution: return "NoFeasibleResolution";
    case ErrorCode::InvalidOntology: return "InvalidOntology";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::GenreAbsent: return "GenreAbsent";
    case ErrorCode::UnfittedProjector: return "UnfittedProjector";
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::MissingDimension: return "MissingDimension";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::NegativeRadius: return "NegativeRadius";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::InsufficientGenres: return "InsufficientGenres";
    case ErrorCode::NetworkError: return "NetworkError";
    case ErrorCode::CacheMiss: return "CacheMiss";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace vecont
