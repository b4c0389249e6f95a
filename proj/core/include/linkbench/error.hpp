#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace linkbench {

enum class ErrorCode {
  // graph-core / ingest
  UnknownNodeId,
  DimensionMismatch,
  IndexOutOfRange,
  ParseError,
  DuplicateId,
  UnknownRelation,
  ConfigInvalid,
  // splitting / sampling
  EmptyGraph,
  DegenerateSplit,
  EmptyPartition,
  SamplingExhausted,
  // nn-core
  ShapeMismatch,
  LengthMismatch,
  MissingGradient,
  NonFinite,
  // models / metrics / harness
  MissingEmbedding,
  ColdSplitUnsupported,
  DegenerateLabels,
  InsufficientNegatives,
  TooFewEdges,
  NonFiniteLoss,
  CheckpointMismatch,
  LeakageDetected,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above so
// callers (and tests) can branch on the kind rather than on message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace linkbench
