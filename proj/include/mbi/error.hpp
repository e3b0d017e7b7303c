#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mbi {

enum class ErrorCode {
  InvalidArgument,
  ParseError,
  NonBlockRow,
  UnobservedCovariate,
  EmptyDonor,
  NoDonorRows,
  SingularDesign,
  DimensionMismatch,
  ZeroTrace,
  AllComponentsDropped,
  NonFiniteObjective,
  LineSearchFailed,
  InitFailed,
  SingularV1,
  NoCompleteGroup,
  InvalidRho,
  NotImplemented,
  AllFitsFailed,
};

std::string_view to_string(ErrorCode code);

/// Library exception carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mbi
