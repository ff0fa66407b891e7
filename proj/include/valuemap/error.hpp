#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace valuemap {

enum class Errc {
  MissingField,
  DuplicateQuestionId,
  NonOrdinalScale,
  LabelOutOfRange,
  UnknownQuestionColumn,
  MalformedRow,
  DuplicateAxis,
  UnknownQuestion,
  UnknownAxis,
  UnknownAxisValue,
  EmptyModes,
  EmptyHistogram,
  DegenerateScale,
  InsufficientSubgroups,
  UnknownCategory,
  InsufficientData,
  MissingDisplayForm,
  ExcludedQuestion,
  OverlappingStrata,
  UnknownStratum,
  IoFailure,
  EmptyManifest,
  TransportError,
  AuthError,
  ConfigError,
  DuplicateRequestId,
  DuplicateResult,
  EmptyGroup,
  EmptyResponse,
  MalformedVerdict,
  BothPassesInvalid,
  NonPositiveValue,
  Empty,
  ZeroMean,
  SingletonStratum,
  LengthMismatch,
  ConstantInput,
  DegenerateMarginals,
  KeyMismatch,
  CaseSetMismatch,
  SampleSetMismatch,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the Python bindings) can branch on the kind of error.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace valuemap
