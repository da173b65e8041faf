#include "wlsremap/error.hpp"

namespace wlsr {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::InsufficientStencil: return "InsufficientStencil";
    case ErrorCode::DegenerateNormal: return "DegenerateNormal";
    case ErrorCode::MissingContext: return "MissingContext";
    case ErrorCode::NotOnSphere: return "NotOnSphere";
    case ErrorCode::NonPositiveError: return "NonPositiveError";
    case ErrorCode::OpenMesh: return "OpenMesh";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace wlsr
