#pragma once

#include <stdexcept>
#include <string>

namespace wlsr {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonFinite,
  Singular,
  NotFound,
  InsufficientStencil,
  DegenerateNormal,
  MissingContext,
  NotOnSphere,
  NonPositiveError,
  OpenMesh,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code. Numerical failures
/// (NonFinite, Singular, InsufficientStencil) are distinguished from
/// configuration failures by `is_numerical()`.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  bool is_numerical() const noexcept {
    return code_ == ErrorCode::NonFinite || code_ == ErrorCode::Singular ||
           code_ == ErrorCode::InsufficientStencil || code_ == ErrorCode::DegenerateNormal;
  }

 private:
  ErrorCode code_;
};

}  // namespace wlsr
