#pragma once

namespace countsel {

/// Entry point of the `countsel` command line tool. Subcommands: run,
/// simulate, oracle, diagnose. Returns the process exit code.
int cli_run(int argc, char** argv);

}  // namespace countsel
