#pragma once

// Command-line front end: train, predict, eval-ie, eval-ir, tune-bias,
// synth, featurize. Exit codes: 0 success, 2 usage error, 1 runtime error.

#include <iosfwd>
#include <string>
#include <vector>

namespace smartboost::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace smartboost::cli
