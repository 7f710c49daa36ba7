#include "loadbal/error.hpp"

namespace loadbal {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIncompleteAssignment: return "incomplete-assignment";
    case ErrorCode::kInfeasibleAssignment: return "infeasible-assignment";
    case ErrorCode::kInfeasibleChoice: return "infeasible-choice";
    case ErrorCode::kGuessTooSmall: return "guess-too-small";
    case ErrorCode::kInfeasibleInstance: return "infeasible-instance";
    case ErrorCode::kInvalidSchedule: return "invalid-schedule";
    case ErrorCode::kInvalidTree: return "invalid-tree";
    case ErrorCode::kSizeLimit: return "size-limit";
    case ErrorCode::kSearchSpaceTooLarge: return "search-space-too-large";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kInvalidSchedule:
    case ErrorCode::kInvalidTree:
    case ErrorCode::kProtocol:
    case ErrorCode::kDomain:
      return 2;
    case ErrorCode::kSizeLimit:
    case ErrorCode::kSearchSpaceTooLarge:
      return 3;
    case ErrorCode::kInfeasibleInstance:
    case ErrorCode::kInfeasibleAssignment:
    case ErrorCode::kInfeasibleChoice:
    case ErrorCode::kGuessTooSmall:
    case ErrorCode::kIncompleteAssignment:
      return 4;
    case ErrorCode::kIo:
      return 5;
  }
  return 1;
}

}  // namespace loadbal
