#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace langdiv {

// Exit statuses of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // an operation raised a library error
inline constexpr int kExitUsage = 2;    // unknown command or bad flags

// Environment variable holding the bearer token for `fetch`.
inline constexpr const char* kFetchCredentialEnv = "LANGDIV_FETCH_TOKEN";

// Name of the per-output-directory lock file.
inline constexpr const char* kLockFileName = ".langdiv.lock";

std::string_view tool_version();

// Runs one subcommand. `args` excludes the program name. Normal output goes
// to `out`; progress and errors go to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace langdiv
