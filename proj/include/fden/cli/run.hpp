// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace fden::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Command-line entry point. `args[0]` is the program name.
///
///   fden <subcommand> [--config FILE] [--set KEY=VALUE]... [--KEY VALUE]... [--out DIR]
///
/// Subcommands: train-host, train-fden, eval-disent, eval-fewshot, transfer,
/// interpolate, mi-bench, rsa, export-factors, report. Returns 0 on success,
/// 1 on a runtime failure and 2 on a usage or config error.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace fden::cli
