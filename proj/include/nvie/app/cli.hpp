#pragma once

#include "nvie/error.hpp"

namespace nvie::app {

/// Exit codes: 0 ok, 1 experiment checks failed, 2 bad input, 3 numerical
/// failure, 4 solver failure.
int run_cli(int argc, char** argv);

int exit_code_for(const Error& e);

}  // namespace nvie::app
