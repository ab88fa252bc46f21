#pragma once

#include <string>
#include <vector>

namespace sinusseg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;

/// Entry point; args[0] is the program name.
int run(const std::vector<std::string>& args);

}  // namespace sinusseg::cli
