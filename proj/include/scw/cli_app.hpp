#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace scw {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

/// Runs the `scw` command line (args excludes the program name).
/// Subcommands: synth, graph, train, report, sweep.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Flat key=value text; blank lines and '#' comments are skipped.
std::map<std::string, std::string> read_key_value_file(const std::string& path);

}  // namespace scw
