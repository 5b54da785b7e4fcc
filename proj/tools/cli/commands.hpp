#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "cli/config.hpp"

namespace wspec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Files produced by a command, keyed by name within the output directory.
struct Outcome {
  int exit_code = kExitOk;
  std::map<std::string, std::string> files;
  std::string summary;
};

Outcome cmd_estimate(const Settings& s);
Outcome cmd_estimate_tv(const Settings& s);
Outcome cmd_test_stationarity(const Settings& s);
Outcome cmd_compare(const Settings& s);
Outcome cmd_simulate(const Settings& s);

/// Dispatches, writes the files and reports. Returns the process exit code.
/// Input problems found before any fitting raise UsageError and write nothing.
int run(const Settings& s, std::ostream& out, std::ostream& err);

/// Resolved settings in config-file form; feeding it back reproduces the run.
std::string config_text(const Settings& s);

}  // namespace wspec::cli
