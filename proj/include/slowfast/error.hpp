#pragma once

#include <stdexcept>
#include <string>

namespace slowfast {

enum class ErrorCode {
  InvalidArgument = 1,
  SingularSystem,
  NotIrreducible,
  AnchorMismatch,
  ClassStructureVaries,
  NoAbsorptionBound,
  SequenceTooShort,
  TruncationInsufficient,
  DimensionMismatch,
  BallViolation,
  ClassMissing,
  ResourceLimit,
  Io,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// the C layer can map it onto a status value without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::InvalidArgument, message);
}

}  // namespace slowfast
