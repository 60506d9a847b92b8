#pragma once

#include <string>
#include <vector>

namespace normint::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsageError = 2;

/// Entry point for the `normint` tool. Subcommands: integrate, decompose,
/// synth, eval.
int cli_main(int argc, char** argv);

/// Convenience overload; args[0] is the program name.
int cli_main(const std::vector<std::string>& args);

}  // namespace normint::cli
