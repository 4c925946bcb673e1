#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace logdesign::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Runs one invocation of the `logdesign` tool. `args` excludes the program
/// name. Returns 0 on success, 1 on invalid input, 2 on file errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace logdesign::cli
