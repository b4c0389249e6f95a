#include "linkbench/error.hpp"

#include <fmt/format.h>

namespace linkbench {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownNodeId: return "UnknownNodeId";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownRelation: return "UnknownRelation";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::EmptyPartition: return "EmptyPartition";
    case ErrorCode::SamplingExhausted: return "SamplingExhausted";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingGradient: return "MissingGradient";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::ColdSplitUnsupported: return "ColdSplitUnsupported";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::InsufficientNegatives: return "InsufficientNegatives";
    case ErrorCode::TooFewEdges: return "TooFewEdges";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::CheckpointMismatch: return "CheckpointMismatch";
    case ErrorCode::LeakageDetected: return "LeakageDetected";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), what)),
      code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace linkbench
