#include "slowfast/error.hpp"

namespace slowfast {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NotIrreducible: return "NotIrreducible";
    case ErrorCode::AnchorMismatch: return "AnchorMismatch";
    case ErrorCode::ClassStructureVaries: return "ClassStructureVaries";
    case ErrorCode::NoAbsorptionBound: return "NoAbsorptionBound";
    case ErrorCode::SequenceTooShort: return "SequenceTooShort";
    case ErrorCode::TruncationInsufficient: return "TruncationInsufficient";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BallViolation: return "BallViolation";
    case ErrorCode::ClassMissing: return "ClassMissing";
    case ErrorCode::ResourceLimit: return "ResourceLimit";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace slowfast
