#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace loadbal {

enum class ErrorCode {
  kIncompleteAssignment,
  kInfeasibleAssignment,
  kInfeasibleChoice,
  kGuessTooSmall,
  kInfeasibleInstance,
  kInvalidSchedule,
  kInvalidTree,
  kSizeLimit,
  kSearchSpaceTooLarge,
  kProtocol,
  kDomain,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Process exit codes: 0 success, 2 config, 3 size-limit, 4 infeasible instance,
// 5 I/O, 1 anything else.
int exit_code_for(ErrorCode code);

}  // namespace loadbal
