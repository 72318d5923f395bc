#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace snecl::cli {

/// Process exit codes of the `snecl` binary.
enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,       // I/O, format or numeric failure
    exit_usage = 2,         // bad command line
    exit_validation = 3,    // invalid configuration, caught before compute
    exit_verify_failed = 4, // a verification suite reported a failing check
};

/// Runs one command line (`args` excludes the program name). Results go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace snecl::cli
