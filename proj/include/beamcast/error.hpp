#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace beamcast {

enum class Errc {
  MismatchedLength,
  EmptyInput,
  SingularCovariance,
  ZeroSteeringVector,
  DimensionMismatch,
  DegenerateDenominator,
  TooShort,
  ConstantChannel,
  DegenerateSplit,
  LengthMismatch,
  InvalidK,
  ShapeMismatch,
  StaleCache,
  Divergence,
  WrongLagCount,
  IllConditioned,
  UnknownCode,
  InvalidConfig,
  IoError,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::MismatchedLength: return "MismatchedLength";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::SingularCovariance: return "SingularCovariance";
    case Errc::ZeroSteeringVector: return "ZeroSteeringVector";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DegenerateDenominator: return "DegenerateDenominator";
    case Errc::TooShort: return "TooShort";
    case Errc::ConstantChannel: return "ConstantChannel";
    case Errc::DegenerateSplit: return "DegenerateSplit";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::InvalidK: return "InvalidK";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::StaleCache: return "StaleCache";
    case Errc::Divergence: return "Divergence";
    case Errc::WrongLagCount: return "WrongLagCount";
    case Errc::IllConditioned: return "IllConditioned";
    case Errc::UnknownCode: return "UnknownCode";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace beamcast
