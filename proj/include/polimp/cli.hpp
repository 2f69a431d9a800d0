#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace polimp::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kValidationError = 1,
  kContractViolation = 2,
  kIoError = 3,
};

/// Entry point of the `polimp` tool. Data goes to `out` or to the files named
/// by --out; diagnostics and (when no file is available) the run manifest go
/// to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace polimp::cli
