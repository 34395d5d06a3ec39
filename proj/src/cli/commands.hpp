#pragma once

#include <string>
#include <vector>

namespace ffm::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kNumericalError = 4 };

/// Parses the command line (args[0] is the program name), runs the selected
/// subcommand and maps library errors to exit codes.
int run(const std::vector<std::string>& args);

} // namespace ffm::cli
