#include "mbi/error.hpp"

namespace mbi {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonBlockRow: return "NonBlockRow";
    case ErrorCode::UnobservedCovariate: return "UnobservedCovariate";
    case ErrorCode::EmptyDonor: return "EmptyDonor";
    case ErrorCode::NoDonorRows: return "NoDonorRows";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroTrace: return "ZeroTrace";
    case ErrorCode::AllComponentsDropped: return "AllComponentsDropped";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::LineSearchFailed: return "LineSearchFailed";
    case ErrorCode::InitFailed: return "InitFailed";
    case ErrorCode::SingularV1: return "SingularV1";
    case ErrorCode::NoCompleteGroup: return "NoCompleteGroup";
    case ErrorCode::InvalidRho: return "InvalidRho";
    case ErrorCode::NotImplemented: return "NotImplemented";
    case ErrorCode::AllFitsFailed: return "AllFitsFailed";
  }
  return "Unknown";
}

}  // namespace mbi
