#pragma once

#include <iosfwd>

namespace msd {

/// Entry point of the `msd` command-line tool. Status and summaries go to
/// `out`, diagnostics to `err`. Returns the process exit status: 0 on success,
/// 1 when a computation fails or a verification check fails, and CLI11's code
/// for usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace msd
