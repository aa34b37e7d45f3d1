#pragma once

#include <stdexcept>
#include <string>

namespace polarndf {

enum class ErrorKind {
  Parse,
  Config,
  DegeneratePose,
  TooFewFrames,
  MissingSourceJoint,
  BankTooSmall,
  KTooSmall,
  DegenerateReference,
  LengthMismatch,
  AlignmentError,
  EmptyBank,
  EmptyGts,
  FormatVersionMismatch,
  SkeletonMismatch,
  CorruptCheckpoint,
  NoFakes,
  NoReals,
  EmptyValidation,
  NonFinite,
  Io,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` tells callers which
/// contract was violated so the CLI can map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace polarndf
