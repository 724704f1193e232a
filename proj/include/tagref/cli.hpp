#pragma once

namespace tagref {

// Entry point behind main(). Exit codes: 0 success, 1 usage error, 2 data
// error, 3 numerical non-convergence (partial output retained when
// available).
int run_cli(int argc, const char* const* argv);

}  // namespace tagref
