#include "faceq/error.hpp"

namespace faceq {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "E_IO";
    case ErrorCode::kInvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::kMalformedRow: return "E_MALFORMED_ROW";
    case ErrorCode::kDimensionMismatch: return "E_DIM_MISMATCH";
    case ErrorCode::kDuplicateImageId: return "E_DUPLICATE_IMAGE_ID";
    case ErrorCode::kUnknownImageId: return "E_UNKNOWN_IMAGE_ID";
    case ErrorCode::kDuplicatePair: return "E_DUPLICATE_PAIR";
    case ErrorCode::kPoolTooSmall: return "E_POOL_TOO_SMALL";
    case ErrorCode::kOutOfOrder: return "E_OUT_OF_ORDER";
    case ErrorCode::kSessionClosed: return "E_SESSION_CLOSED";
    case ErrorCode::kIncomplete: return "E_INCOMPLETE";
    case ErrorCode::kUnknownReference: return "E_UNKNOWN_REFERENCE";
    case ErrorCode::kWorkerWithoutData: return "E_WORKER_NO_DATA";
    case ErrorCode::kTooFewWorkers: return "E_TOO_FEW_WORKERS";
    case ErrorCode::kDegenerateImpostorSpread: return "E_DEGENERATE_SPREAD";
    case ErrorCode::kMissingGenuineScore: return "E_MISSING_GENUINE";
    case ErrorCode::kTooFewImpostors: return "E_TOO_FEW_IMPOSTORS";
    case ErrorCode::kTooFewRows: return "E_TOO_FEW_ROWS";
    case ErrorCode::kNonFiniteInput: return "E_NON_FINITE";
    case ErrorCode::kNoConvergence: return "E_NO_CONVERGENCE";
    case ErrorCode::kTooFewSubjects: return "E_TOO_FEW_SUBJECTS";
    case ErrorCode::kGridExhausted: return "E_GRID_EXHAUSTED";
    case ErrorCode::kMalformedModelFile: return "E_MALFORMED_MODEL";
    case ErrorCode::kVersionMismatch: return "E_VERSION_MISMATCH";
    case ErrorCode::kEmptyScores: return "E_EMPTY_SCORES";
    case ErrorCode::kLengthMismatch: return "E_LENGTH_MISMATCH";
    case ErrorCode::kDegenerateConstantInput: return "E_DEGENERATE_INPUT";
    case ErrorCode::kMissingQuality: return "E_MISSING_QUALITY";
    case ErrorCode::kMissingPairScore: return "E_MISSING_PAIR_SCORE";
    case ErrorCode::kMissingTarget: return "E_MISSING_TARGET";
    case ErrorCode::kNotFound: return "E_NOT_FOUND";
  }
  return "E_UNKNOWN";
}

bool is_numeric_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateImpostorSpread:
    case ErrorCode::kNoConvergence:
    case ErrorCode::kGridExhausted:
    case ErrorCode::kDegenerateConstantInput:
    case ErrorCode::kNonFiniteInput:
      return true;
    default:
      return false;
  }
}

}  // namespace faceq
