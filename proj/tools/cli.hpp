#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace phrasecomp::cli {

// Runs one subcommand (args[0] is the program name). Returns the process exit
// status: 0 on success, 1 on a runtime failure, 2 on a usage error. Failures
// are reported as a single diagnostic line on `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace phrasecomp::cli
