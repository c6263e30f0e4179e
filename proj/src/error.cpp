#include "mkbary/error.hpp"

namespace mkbary {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::MassNotOne: return "MassNotOne";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::ImageOutsideSpace: return "ImageOutsideSpace";
    case ErrorCode::SpaceMismatch: return "SpaceMismatch";
    case ErrorCode::UnboundedRatio: return "UnboundedRatio";
    case ErrorCode::ConstructionFailed: return "ConstructionFailed";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::MarginalMismatch: return "MarginalMismatch";
    case ErrorCode::NotConvexCost: return "NotConvexCost";
    case ErrorCode::NotOneDimensional: return "NotOneDimensional";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace mkbary
