#pragma once

namespace pars {

// Entry point for the `pars` binary. Parses argv, dispatches to one of the
// subcommands (gen-workload, train, eval-predictor, simulate, compare) and
// returns the process exit code: 0 on success, nonzero when a contract
// fires. Also usable in-process from tests.
int run_cli(int argc, const char* const* argv);

}  // namespace pars
