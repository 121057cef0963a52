#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "survcart/error.hpp"

namespace survcart::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kDataError = 2,
  kConfigError = 3,
  kSpecError = 4,
  kIoError = 5,
};

/// Exit code for a library error.
int exit_code_for(ErrorCode code) noexcept;

/// Runs the command line `args` (args[0] is the program name) writing normal
/// output to `out` and diagnostics to `err`. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace survcart::cli
