#include "cascadelab/error.hpp"

namespace cascadelab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::MeanNotOne: return "MeanNotOne";
    case ErrorCode::NegativeMomentOfZeroAtom: return "NegativeMomentOfZeroAtom";
    case ErrorCode::MomentInfinite: return "MomentInfinite";
    case ErrorCode::ZeroMoment: return "ZeroMoment";
    case ErrorCode::DegenerateModel: return "DegenerateModel";
    case ErrorCode::DepthTooLarge: return "DepthTooLarge";
    case ErrorCode::ZeroTotalMass: return "ZeroTotalMass";
    case ErrorCode::AllMassZero: return "AllMassZero";
    case ErrorCode::ZeroMassPath: return "ZeroMassPath";
    case ErrorCode::DegenerateGrid: return "DegenerateGrid";
    case ErrorCode::InsufficientReplicas: return "InsufficientReplicas";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ZeroMassEncountered: return "ZeroMassEncountered";
    case ErrorCode::BetaOutOfRange: return "BetaOutOfRange";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::DigestMismatch: return "DigestMismatch";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
  }
  return "Unknown";
}

bool is_configuration_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParameter:
    case ErrorCode::MeanNotOne:
    case ErrorCode::DepthTooLarge:
    case ErrorCode::DegenerateGrid:
    case ErrorCode::InsufficientReplicas:
    case ErrorCode::BadMagic:
    case ErrorCode::IoFailure:
      return true;
    default:
      return false;
  }
}

CascadeError::CascadeError(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace cascadelab
