#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mtp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

/// Entry point of the `mtp` tool. args excludes the program name.
int run_command(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace mtp::cli
