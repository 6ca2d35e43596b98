#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace beamcast::cli {

enum ExitCode { kOk = 0, kUsage = 1, kRuntime = 2 };

/// Entry point of the `beamcast` tool; argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

/// Convenience overload; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace beamcast::cli
