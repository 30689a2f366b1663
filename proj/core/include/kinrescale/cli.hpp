#pragma once

namespace kinrescale {

// Command-line entry point shared by the installed binary and the tests.
//   run <config> [--out DIR] [--seed N] [--threads N]   integrate a scenario
//   verify                                              oracle/property battery
//   kernel-cache <config> [--out DIR]                   precompute kernel files
// Exit codes: 0 success, 1 usage/config errors, 2 runtime solver failures.
// Thread count resolution: --threads, else KINRESCALE_THREADS, else the
// hardware concurrency.
int cli_main(int argc, char** argv);

}  // namespace kinrescale
