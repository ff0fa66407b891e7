#include "valuemap/error.hpp"

namespace valuemap {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MissingField: return "MissingField";
    case Errc::DuplicateQuestionId: return "DuplicateQuestionId";
    case Errc::NonOrdinalScale: return "NonOrdinalScale";
    case Errc::LabelOutOfRange: return "LabelOutOfRange";
    case Errc::UnknownQuestionColumn: return "UnknownQuestionColumn";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::DuplicateAxis: return "DuplicateAxis";
    case Errc::UnknownQuestion: return "UnknownQuestion";
    case Errc::UnknownAxis: return "UnknownAxis";
    case Errc::UnknownAxisValue: return "UnknownAxisValue";
    case Errc::EmptyModes: return "EmptyModes";
    case Errc::EmptyHistogram: return "EmptyHistogram";
    case Errc::DegenerateScale: return "DegenerateScale";
    case Errc::InsufficientSubgroups: return "InsufficientSubgroups";
    case Errc::UnknownCategory: return "UnknownCategory";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::MissingDisplayForm: return "MissingDisplayForm";
    case Errc::ExcludedQuestion: return "ExcludedQuestion";
    case Errc::OverlappingStrata: return "OverlappingStrata";
    case Errc::UnknownStratum: return "UnknownStratum";
    case Errc::IoFailure: return "IoFailure";
    case Errc::EmptyManifest: return "EmptyManifest";
    case Errc::TransportError: return "TransportError";
    case Errc::AuthError: return "AuthError";
    case Errc::ConfigError: return "ConfigError";
    case Errc::DuplicateRequestId: return "DuplicateRequestId";
    case Errc::DuplicateResult: return "DuplicateResult";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::EmptyResponse: return "EmptyResponse";
    case Errc::MalformedVerdict: return "MalformedVerdict";
    case Errc::BothPassesInvalid: return "BothPassesInvalid";
    case Errc::NonPositiveValue: return "NonPositiveValue";
    case Errc::Empty: return "Empty";
    case Errc::ZeroMean: return "ZeroMean";
    case Errc::SingletonStratum: return "SingletonStratum";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::ConstantInput: return "ConstantInput";
    case Errc::DegenerateMarginals: return "DegenerateMarginals";
    case Errc::KeyMismatch: return "KeyMismatch";
    case Errc::CaseSetMismatch: return "CaseSetMismatch";
    case Errc::SampleSetMismatch: return "SampleSetMismatch";
  }
  return "Unknown";
}

}  // namespace valuemap
