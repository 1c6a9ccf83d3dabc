#pragma once

#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

namespace resbound::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kDegenerate = 2, kIntegrity = 3 };

/// Entry point behind the `resbound` executable; args exclude the program name.
///   resbound <sample|crb|scrb|bench> --config <path> --out <dir> [--threads n]
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Prints the error and maps it to an exit code.
int exit_code_for(std::exception_ptr error, std::ostream& err);

}  // namespace resbound::cli
