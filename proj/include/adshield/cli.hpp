#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace adshield::cli {

enum ExitCode : int {
  kOk = 0,
  kDataError = 1,
  kUsageError = 2,
  kPartialGeneration = 3,
};

/// Runs one subcommand: ingest | train | predict | tag | generate | evaluate
/// | robustness | report. Options may also come from a key=value config file
/// given with --config (command-line flags win). Every run writes the fully
/// resolved configuration next to its main output ("<output>.run.ini").
int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int execute(int argc, const char* const* argv);

}  // namespace adshield::cli
