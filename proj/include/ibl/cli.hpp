#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ibl::cli {

/// Process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kInputError = 1,
  kIndependent = 2,
  kNotConverged = 3,
};

/// Runs one command line (without the program name). Output files go to
/// --out-dir, else $IBL_OUTPUT_DIR, else the working directory.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ibl::cli
