#pragma once

#include <string>
#include <vector>

namespace conn {

extern const char* const kToolVersion;

// Full command-line front end. args excludes the program name. Returns the
// process exit code: 0 success, 1 usage or configuration error, 2 runtime
// failure. Every subcommand writes report.json (and its sibling artifacts)
// into the --out directory; reports embed the effective configuration and
// seed so a rerun reproduces them byte for byte.
int cli_dispatch(const std::vector<std::string>& args);
int cli_dispatch(int argc, const char* const* argv);

}  // namespace conn
