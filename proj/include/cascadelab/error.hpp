#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cascadelab {

enum class ErrorCode {
  InvalidParameter,
  MeanNotOne,
  NegativeMomentOfZeroAtom,
  MomentInfinite,
  ZeroMoment,
  DegenerateModel,
  DepthTooLarge,
  ZeroTotalMass,
  AllMassZero,
  ZeroMassPath,
  DegenerateGrid,
  InsufficientReplicas,
  InsufficientData,
  ZeroMassEncountered,
  BetaOutOfRange,
  IoFailure,
  BadMagic,
  DigestMismatch,
  TruncatedPayload,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for codes caused by a malformed model or experiment description
/// rather than by the numerics of a well-formed one.
bool is_configuration_error(ErrorCode code) noexcept;

class CascadeError : public std::runtime_error {
 public:
  CascadeError(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cascadelab
