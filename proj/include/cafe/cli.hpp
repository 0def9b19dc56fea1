#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cafe::cli {

/// Process exit codes. Stable; documented in the README.
enum ExitCode : int {
    kOk = 0,
    kUsage = 1,       // bad command line or unexpected internal failure
    kConfig = 2,      // spec / config / harness content
    kIo = 3,          // unreadable input or unwritable output
    kValidation = 4,  // dataset content
    kSolver = 5,      // regression or inverse-solve failure
};

/// Runs one command line (without the program name). Diagnostics go to
/// `err`; `out` only receives the --json summary.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cafe::cli
