#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace surfaceai::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kStageFailure = 2 };

// args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace surfaceai::cli
