/// @file cli.hpp
/// @brief `genreforge` command dispatcher, usable in-process for tests.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace genreforge {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitTraining = 3 };

/// `args` excludes the program name. Output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace genreforge
