#include "iotad/error.hpp"

namespace iotad {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kWrongFieldCount: return "WrongFieldCount";
    case ErrorCode::kNonNumericField: return "NonNumericField";
    case ErrorCode::kEmptyField: return "EmptyField";
    case ErrorCode::kRateOutOfRange: return "RateOutOfRange";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUnseenCategory: return "UnseenCategory";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kKernelTooWide: return "KernelTooWide";
    case ErrorCode::kCalledBeforeForward: return "CalledBeforeForward";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kEmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::kEmptyModel: return "EmptyModel";
    case ErrorCode::kDivergence: return "DivergenceDetected";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kCodeOutOfRange: return "CodeOutOfRange";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kUnknownConfigKey: return "UnknownConfigKey";
    case ErrorCode::kBundleFormat: return "BundleFormat";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
  }
  return "Unknown";
}

}  // namespace iotad
