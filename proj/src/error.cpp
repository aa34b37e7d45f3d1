#include "polarndf/error.hpp"

namespace polarndf {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::DegeneratePose: return "DegeneratePose";
    case ErrorKind::TooFewFrames: return "TooFewFrames";
    case ErrorKind::MissingSourceJoint: return "MissingSourceJoint";
    case ErrorKind::BankTooSmall: return "BankTooSmall";
    case ErrorKind::KTooSmall: return "KTooSmall";
    case ErrorKind::DegenerateReference: return "DegenerateReference";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::AlignmentError: return "AlignmentError";
    case ErrorKind::EmptyBank: return "EmptyBank";
    case ErrorKind::EmptyGts: return "EmptyGts";
    case ErrorKind::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorKind::SkeletonMismatch: return "SkeletonMismatch";
    case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::NoFakes: return "NoFakes";
    case ErrorKind::NoReals: return "NoReals";
    case ErrorKind::EmptyValidation: return "EmptyValidation";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::Io: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace polarndf
