#pragma once

#include "opo/config.hpp"

namespace opo {

// Runs the configured experiment and writes its outputs under cfg.out_dir
// (created if missing). Progress goes to stdout, problems to stderr.
// Returns the process exit code: 0 success, 1 bad configuration, 2 numerical
// failure (too many diverged trajectories), 3 self-test failure.
int run_experiment(const RunConfig& cfg);

}  // namespace opo
