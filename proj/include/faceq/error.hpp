#pragma once

#include <stdexcept>
#include <string>

namespace faceq {

enum class ErrorCode {
  kIo,
  kInvalidArgument,
  kMalformedRow,
  kDimensionMismatch,
  kDuplicateImageId,
  kUnknownImageId,
  kDuplicatePair,
  kPoolTooSmall,
  kOutOfOrder,
  kSessionClosed,
  kIncomplete,
  kUnknownReference,
  kWorkerWithoutData,
  kTooFewWorkers,
  kDegenerateImpostorSpread,
  kMissingGenuineScore,
  kTooFewImpostors,
  kTooFewRows,
  kNonFiniteInput,
  kNoConvergence,
  kTooFewSubjects,
  kGridExhausted,
  kMalformedModelFile,
  kVersionMismatch,
  kEmptyScores,
  kLengthMismatch,
  kDegenerateConstantInput,
  kMissingQuality,
  kMissingPairScore,
  kMissingTarget,
  kNotFound,
};

// Machine-parsable token, e.g. "E_DIM_MISMATCH".
const char* error_code_name(ErrorCode code);

// True for failures caused by the numbers themselves rather than by the
// shape of the input (CLI exit status 3 instead of 2).
bool is_numeric_failure(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace faceq
