#pragma once

#include <array>
#include <cstdint>

#include "opo/grid.hpp"

namespace opo {

// Philox4x32-10 counter-based generator. A (key, counter) pair maps to four
// 32-bit words; identical inputs give identical outputs on any host, so the
// noise a trajectory sees is a pure function of (seed, stream id, step), not
// of scheduling or worker count.
struct PhiloxKey {
    uint32_t k0, k1;
};
struct PhiloxCounter {
    uint32_t c0, c1, c2, c3;
};
std::array<uint32_t, 4> philox4x32(PhiloxKey key, PhiloxCounter ctr);

// Two standard normals from one Philox block via Box-Muller. Box-Muller keeps
// the draw count per block fixed, which the counter layout relies on
// (rejection-style samplers would consume a data-dependent number of blocks).
std::array<double, 2> normals_from_block(PhiloxKey key, PhiloxCounter ctr);
// Uniform in (0, 1] from the first two words of a block.
double uniform_from_block(PhiloxKey key, PhiloxCounter ctr);

// Equation tags keep logically distinct noise sources on disjoint streams.
enum class NoiseTag : uint32_t {
    reduced_field = 0,
    pair_fields = 1,
    mcmc_proposal = 2,
    mcmc_accept = 3,
};

// One logical noise stream: addressed by (seed, trajectory, tag), advancing
// one macro time step per sample call. With substeps = m > 1 the stream
// consumes the same fine-step draws an m-times-finer run would consume, and
// combines them as z = (z_f1 + ... + z_fm)/sqrt(m) at the standard-normal
// level, so coarse and refined runs share one Wiener path.
struct NoiseStream {
    uint64_t seed = 0;
    uint32_t trajectory = 0;
    NoiseTag tag = NoiseTag::reduced_field;
    uint64_t step = 0;
    uint32_t substeps = 1;

    PhiloxKey key() const {
        return {static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)};
    }
    // Counter layout: c0 = block index within the step, (c1, c2) = fine step
    // index, c3 = trajectory and tag. Trajectory ids must stay below 2^24.
    PhiloxCounter counter(uint64_t fine_step, uint32_t block) const;
};

// White vector noise for the reduced field: two independent real components
// per site, each with variance 1/(cell_area * dt) per step (discrete delta
// correlation in space and time).
void sample_vector_noise(NoiseStream& stream, const GridSpec& grid, double dt,
                         VectorField& out);

// Same draws packed as one complex field zeta = zeta_1 + i*zeta_2, so
// <zeta zeta*> = 2/(cell_area * dt) and <zeta^2> = 0. Consumes exactly the
// counters sample_vector_noise would.
void reduced_complex_noise(NoiseStream& stream, const GridSpec& grid, double dt,
                           ComplexField& out);

// Correlated pair noise for the two-mode model: xi satisfies
// <xi(r) xi_partner(r')> = delta_{rr'}/(cell_area*dt) with xi_partner = conj(xi),
// and xi_plus is an independent such pair for the conjugate fields.
// Consumes two blocks per site (four real normals).
void pair_noise(NoiseStream& stream, const GridSpec& grid, double dt,
                ComplexField& xi, ComplexField& xi_plus);

// Same draws expanded to the four named fields, with xi2 = conj(xi1) and
// xi2_plus = conj(xi1_plus) exactly.
struct PairNoise {
    ComplexField xi1, xi2, xi1_plus, xi2_plus;
};
PairNoise sample_pair_noise(NoiseStream& stream, const GridSpec& grid,
                            double dt);

}  // namespace opo
