#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cgn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs the `cgn` command line. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cgn::cli
