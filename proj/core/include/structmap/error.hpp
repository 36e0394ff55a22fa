#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace structmap {

enum class ErrorCode {
  IoError,
  ParseError,
  BadMagic,
  DimMismatch,
  RowOutOfRange,
  CountMismatch,
  NonFinite,
  InconsistentGroup,
  InvalidConfig,
  InvalidDims,
  NoUsableGroups,
  NoValidNegative,
  UnminedBatch,
  MissingAnnotations,
  EmptyCandidateSet,
  LengthMismatch,
  InsufficientData,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can dispatch on the kind rather than the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace structmap
