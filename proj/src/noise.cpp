#include "opo/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace opo {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(uint32_t& c0, uint32_t& c1, uint32_t& c2, uint32_t& c3,
                         uint32_t k0, uint32_t k1) {
    const uint64_t p0 = static_cast<uint64_t>(kPhiloxM0) * c0;
    const uint64_t p1 = static_cast<uint64_t>(kPhiloxM1) * c2;
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    const uint32_t lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    const uint32_t lo1 = static_cast<uint32_t>(p1);
    c0 = hi1 ^ c1 ^ k0;
    c1 = lo1;
    c2 = hi0 ^ c3 ^ k1;
    c3 = lo0;
}

// Two uniforms in (0, 1] from the four output words; the shift to (0, 1]
// keeps log(u) finite in Box-Muller.
inline void uniforms_from_words(const std::array<uint32_t, 4>& w, double& u1,
                                double& u2) {
    const uint64_t a = (static_cast<uint64_t>(w[0]) << 32) | w[1];
    const uint64_t b = (static_cast<uint64_t>(w[2]) << 32) | w[3];
    constexpr double scale = 0x1.0p-53;
    u1 = (static_cast<double>(a >> 11) + 1.0) * scale;
    u2 = (static_cast<double>(b >> 11) + 1.0) * scale;
}

inline void box_muller(const std::array<uint32_t, 4>& w, double& z0,
                       double& z1) {
    double u1, u2;
    uniforms_from_words(w, u1, u2);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    z0 = r * std::cos(phi);
    z1 = r * std::sin(phi);
}

}  // namespace

std::array<uint32_t, 4> philox4x32(PhiloxKey key, PhiloxCounter ctr) {
    uint32_t c0 = ctr.c0, c1 = ctr.c1, c2 = ctr.c2, c3 = ctr.c3;
    uint32_t k0 = key.k0, k1 = key.k1;
    for (int round = 0; round < 10; ++round) {
        philox_round(c0, c1, c2, c3, k0, k1);
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    return {c0, c1, c2, c3};
}

std::array<double, 2> normals_from_block(PhiloxKey key, PhiloxCounter ctr) {
    double z0, z1;
    box_muller(philox4x32(key, ctr), z0, z1);
    return {z0, z1};
}

double uniform_from_block(PhiloxKey key, PhiloxCounter ctr) {
    double u1, u2;
    uniforms_from_words(philox4x32(key, ctr), u1, u2);
    (void)u2;
    return u1;
}

PhiloxCounter NoiseStream::counter(uint64_t fine_step, uint32_t block) const {
    if (trajectory >= (1u << 24))
        throw std::invalid_argument("noise: trajectory id must be < 2^24");
    const uint32_t id = (trajectory << 8) | (static_cast<uint32_t>(tag) & 0xFFu);
    return {block, static_cast<uint32_t>(fine_step),
            static_cast<uint32_t>(fine_step >> 32), id};
}

namespace {

// Fills out[0..n) with standard normals for macro step `step`, one Philox
// block per pair, blocks laid out as site-major so a refined run visits the
// same (fine_step, block) pairs.
void fill_normals(const NoiseStream& stream, uint64_t macro_step, size_t n,
                  double scale, double* out) {
    const PhiloxKey key = stream.key();
    const uint32_t m = stream.substeps;
    const size_t nblocks = n / 2;
    const double comb = scale / std::sqrt(static_cast<double>(m));
    for (size_t b = 0; b < nblocks; ++b) {
        double s0 = 0.0, s1 = 0.0;
        for (uint32_t j = 0; j < m; ++j) {
            const uint64_t fine = macro_step * m + j;
            double z0, z1;
            box_muller(philox4x32(key, stream.counter(fine,
                                                      static_cast<uint32_t>(b))),
                       z0, z1);
            s0 += z0;
            s1 += z1;
        }
        out[2 * b] = s0 * comb;
        out[2 * b + 1] = s1 * comb;
    }
}

}  // namespace

void sample_vector_noise(NoiseStream& stream, const GridSpec& grid, double dt,
                         VectorField& out) {
    if (!(dt > 0.0)) throw std::invalid_argument("noise: dt must be positive");
    if (stream.substeps < 1)
        throw std::invalid_argument("noise: substeps must be >= 1");
    const size_t n = static_cast<size_t>(grid.size());
    out.c1.resize(n);
    out.c2.resize(n);
    const double sigma = 1.0 / std::sqrt(grid.cell_area() * dt);
    std::vector<double> z(2 * n);
    fill_normals(stream, stream.step, 2 * n, sigma, z.data());
    for (size_t i = 0; i < n; ++i) {
        out.c1[i] = z[2 * i];
        out.c2[i] = z[2 * i + 1];
    }
    ++stream.step;
}

void reduced_complex_noise(NoiseStream& stream, const GridSpec& grid, double dt,
                           ComplexField& out) {
    if (!(dt > 0.0)) throw std::invalid_argument("noise: dt must be positive");
    if (stream.substeps < 1)
        throw std::invalid_argument("noise: substeps must be >= 1");
    const size_t n = static_cast<size_t>(grid.size());
    out.resize(n);
    const double sigma = 1.0 / std::sqrt(grid.cell_area() * dt);
    std::vector<double> z(2 * n);
    fill_normals(stream, stream.step, 2 * n, sigma, z.data());
    for (size_t i = 0; i < n; ++i) out[i] = Complex(z[2 * i], z[2 * i + 1]);
    ++stream.step;
}

void pair_noise(NoiseStream& stream, const GridSpec& grid, double dt,
                ComplexField& xi, ComplexField& xi_plus) {
    if (!(dt > 0.0)) throw std::invalid_argument("noise: dt must be positive");
    if (stream.substeps < 1)
        throw std::invalid_argument("noise: substeps must be >= 1");
    const size_t n = static_cast<size_t>(grid.size());
    xi.resize(n);
    xi_plus.resize(n);
    const double sigma = 1.0 / std::sqrt(grid.cell_area() * dt);
    std::vector<double> z(4 * n);
    fill_normals(stream, stream.step, 4 * n, sigma, z.data());
    // xi = (zx + i*zy)/sqrt(2): then <xi * conj(xi)> = sigma^2 and the
    // correlated partner is exactly conj(xi).
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (size_t i = 0; i < n; ++i) {
        xi[i] = Complex(z[4 * i], z[4 * i + 1]) * inv_sqrt2;
        xi_plus[i] = Complex(z[4 * i + 2], z[4 * i + 3]) * inv_sqrt2;
    }
    ++stream.step;
}

PairNoise sample_pair_noise(NoiseStream& stream, const GridSpec& grid,
                            double dt) {
    PairNoise out;
    pair_noise(stream, grid, dt, out.xi1, out.xi1_plus);
    const size_t n = out.xi1.size();
    out.xi2.resize(n);
    out.xi2_plus.resize(n);
    for (size_t i = 0; i < n; ++i) {
        out.xi2[i] = std::conj(out.xi1[i]);
        out.xi2_plus[i] = std::conj(out.xi1_plus[i]);
    }
    return out;
}

}  // namespace opo
