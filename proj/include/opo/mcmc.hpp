#pragma once

#include <cstdint>
#include <vector>

#include "opo/grid.hpp"
#include "opo/params.hpp"

namespace opo {

// Metropolis sampler of the stationary functional distribution
// P(X) = N exp(-H(X)) on the lattice, used as an oracle against the SDE
// steady state. Proposals are site-local Gaussian moves on both components;
// the H change per move is evaluated exactly through cached spectral
// derivatives, which are rebuilt from FFTs once per sweep.
// Site-local moves random-walk the k = 0 mode, whose autocorrelation time
// reaches ~1000 sweeps on a 16x16 near-critical lattice. The defaults cover
// that worst intended use; damped targets equilibrate much faster and can
// run with far smaller burn-in and pilot phases.
struct McmcConfig {
    int n_samples = 100;         // decorrelated samples to return
    int burn_in_sweeps = 10000;  // scale adaptation happens here, then freezes
    int pilot_sweeps = 10000;    // measures the autocorrelation time
    double initial_scale = 0.5;
    bool quadratic_only = false;  // drop the quartic term (Gaussian target)
    uint64_t seed = 0;
    uint32_t chain = 0;  // stream id; parallel chains use distinct values
};

struct McmcResult {
    std::vector<VectorField> samples;
    double acceptance_rate = 0.0;  // measurement phase
    double proposal_scale = 0.0;   // frozen scale actually used
    double autocorr_sweeps = 0.0;  // integrated autocorrelation of X.X
    int thin = 1;                  // sweeps between stored samples
    // Acceptance left [0.1, 0.9] despite auto-tuning; estimates may be poor.
    bool acceptance_warning = false;
};

McmcResult mcmc_sample(const GridSpec& grid, const EtaSet& etas,
                       const McmcConfig& cfg);

}  // namespace opo
