#include "syntaxlens/error.hpp"

namespace syntaxlens {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::Encoding: return "Encoding";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::MissingRealizedToken: return "MissingRealizedToken";
    case ErrorCode::SpanOverlap: return "SpanOverlap";
    case ErrorCode::UnsortedSpans: return "UnsortedSpans";
    case ErrorCode::InvalidSpan: return "InvalidSpan";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::ZeroProbability: return "ZeroProbability";
    case ErrorCode::SourceMismatch: return "SourceMismatch";
    case ErrorCode::AggregationMismatch: return "AggregationMismatch";
    case ErrorCode::UnknownCategoryName: return "UnknownCategoryName";
    case ErrorCode::DuplicateKind: return "DuplicateKind";
    case ErrorCode::MissingGeneratedSpan: return "MissingGeneratedSpan";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MissingTlp: return "MissingTlp";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::LogprobsUnsupported: return "LogprobsUnsupported";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::SpanReconstructionFailure: return "SpanReconstructionFailure";
    case ErrorCode::Http: return "HttpError";
  }
  return "Unknown";
}

}  // namespace syntaxlens
