#include "structmap/error.hpp"

namespace structmap {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::RowOutOfRange: return "RowOutOfRange";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InconsistentGroup: return "InconsistentGroup";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidDims: return "InvalidDims";
    case ErrorCode::NoUsableGroups: return "NoUsableGroups";
    case ErrorCode::NoValidNegative: return "NoValidNegative";
    case ErrorCode::UnminedBatch: return "UnminedBatch";
    case ErrorCode::MissingAnnotations: return "MissingAnnotations";
    case ErrorCode::EmptyCandidateSet: return "EmptyCandidateSet";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace structmap
