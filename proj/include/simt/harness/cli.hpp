#pragma once

#include <string>
#include <vector>

namespace simt::harness {

/// Entry point of the `simt` tool. `args[0]` is the program name. Returns 0 on
/// success (and for --help), 1 for usage or configuration errors, 2 for
/// runtime failures.
int cli_main(const std::vector<std::string> &args);

/// Reads a key=value config file ('#' starts a comment) into flag arguments:
/// "lambda=0.1" becomes {"--lambda", "0.1"}.
std::vector<std::string> config_file_args(const std::string &path);

} // namespace simt::harness
