#include "opo/mcmc.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "opo/noise.hpp"

namespace opo {

namespace {

struct Chain {
    GridSpec grid;
    EtaSet etas;
    bool quadratic_only;
    SpectralWorkspace ws;
    VectorField X;
    VectorField L2, L4;  // spectral Laplacian and bilaplacian of X
    std::vector<double> kernel2, kernel4;  // single-site impulse responses
    double m1, m2;  // diagonal of the quadratic forms: (1/N)*sum_k k^2, k^4
    PhiloxKey key;
    NoiseStream prop_stream, accept_stream;
    double scale;
    uint64_t sweep_index = 0;

    Chain(const GridSpec& g, const EtaSet& e, const McmcConfig& cfg)
        : grid(g), etas(e), quadratic_only(cfg.quadratic_only), ws(g) {
        const int n = g.size();
        X.c1.assign(n, 0.0);
        X.c2.assign(n, 0.0);
        L2.c1.assign(n, 0.0);
        L2.c2.assign(n, 0.0);
        L4.c1.assign(n, 0.0);
        L4.c2.assign(n, 0.0);
        // Impulse response of the multiplier M: applying M after adding
        // delta at site s adds delta*kernel((r-s) mod grid) everywhere.
        // With the unitary transform pair that kernel is IFFT(mult)/sqrt(N).
        ComplexField f(n), out(n);
        const double rn = std::sqrt(static_cast<double>(n));
        kernel2.resize(n);
        kernel4.resize(n);
        for (int j = 0; j < n; ++j) f[j] = Complex(-ws.k2()[j], 0.0);
        ws.transform_inverse(f, out);
        for (int j = 0; j < n; ++j) kernel2[j] = out[j].real() / rn;
        for (int j = 0; j < n; ++j) f[j] = Complex(ws.k4()[j], 0.0);
        ws.transform_inverse(f, out);
        for (int j = 0; j < n; ++j) kernel4[j] = out[j].real() / rn;
        m1 = -kernel2[0];
        m2 = kernel4[0];
        prop_stream = NoiseStream{cfg.seed, cfg.chain, NoiseTag::mcmc_proposal,
                                  0, 1};
        accept_stream = NoiseStream{cfg.seed, cfg.chain, NoiseTag::mcmc_accept,
                                    0, 1};
        key = prop_stream.key();
        scale = cfg.initial_scale;
    }

    void refresh_caches() {
        ws.laplacian(X, L2);
        ws.biharmonic(X, L4);
    }

    // One full sweep of single-site proposals; returns the acceptance rate.
    double sweep() {
        const int nx = grid.nx, ny = grid.ny, n = grid.size();
        const double dA = grid.cell_area();
        int accepted = 0;
        for (int s = 0; s < n; ++s) {
            auto nrm = normals_from_block(
                key, prop_stream.counter(sweep_index,
                                         static_cast<uint32_t>(s)));
            double d1 = scale * nrm[0];
            double d2 = scale * nrm[1];
            double x1 = X.c1[s], x2 = X.c2[s];
            double y1 = x1 + d1, y2 = x2 + d2;
            double i_old = x1 * x1 + x2 * x2;
            double i_new = y1 * y1 + y2 * y2;
            double dlocal = etas.eta1 * (i_new - i_old);
            if (!quadratic_only)
                dlocal += 0.5 * (i_new * i_new - i_old * i_old);
            double dd = d1 * d1 + d2 * d2;
            double dq1 = -2.0 * (d1 * L2.c1[s] + d2 * L2.c2[s]) + dd * m1;
            double dq2 = 2.0 * (d1 * L4.c1[s] + d2 * L4.c2[s]) + dd * m2;
            double dh = dA * (dlocal + etas.eta2 * dq1 + etas.eta3 * dq2);
            double u = uniform_from_block(
                key, accept_stream.counter(sweep_index,
                                           static_cast<uint32_t>(s)));
            if (std::log(u) <= -dh) {
                ++accepted;
                X.c1[s] = y1;
                X.c2[s] = y2;
                // The derivative caches shift by the impulse kernels; exact,
                // so H deltas stay consistent until the per-sweep rebuild.
                const int sx = s / ny, sy = s % ny;
                for (int ix = 0; ix < nx; ++ix) {
                    const int krow = ((ix - sx + nx) % nx) * ny;
                    const int row = ix * ny;
                    for (int iy = 0; iy < ny; ++iy) {
                        const int kidx = krow + (iy - sy + ny) % ny;
                        const int r = row + iy;
                        L2.c1[r] += d1 * kernel2[kidx];
                        L2.c2[r] += d2 * kernel2[kidx];
                        L4.c1[r] += d1 * kernel4[kidx];
                        L4.c2[r] += d2 * kernel4[kidx];
                    }
                }
            }
        }
        ++sweep_index;
        refresh_caches();
        return static_cast<double>(accepted) / n;
    }

    double intensity() const {
        double sum = 0.0;
        const int n = grid.size();
        for (int j = 0; j < n; ++j)
            sum += X.c1[j] * X.c1[j] + X.c2[j] * X.c2[j];
        return sum / n;
    }
};

double integrated_autocorr(const std::vector<double>& v) {
    const int n = static_cast<int>(v.size());
    if (n < 8) return 1.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= n;
    if (!(var > 0.0)) return 1.0;
    double tau = 1.0;
    const int tmax = n / 4;
    for (int t = 1; t <= tmax; ++t) {
        double c = 0.0;
        for (int i = 0; i + t < n; ++i) c += (v[i] - mean) * (v[i + t] - mean);
        c /= (n - t) * var;
        if (c < 0.05) break;
        tau += 2.0 * c;
    }
    return tau;
}

}  // namespace

McmcResult mcmc_sample(const GridSpec& grid, const EtaSet& etas,
                       const McmcConfig& cfg) {
    grid.validate();
    if (!(etas.eta3 > 0.0))
        throw std::invalid_argument("mcmc_sample: eta3 must be positive");
    if (cfg.n_samples < 1)
        throw std::invalid_argument("mcmc_sample: n_samples must be >= 1");
    if (!(cfg.initial_scale > 0.0))
        throw std::invalid_argument("mcmc_sample: proposal scale must be positive");
    Chain chain(grid, etas, cfg);
    if (cfg.quadratic_only) {
        // Without the quartic term the target is Gaussian and must be proper:
        // every lattice mode needs a positive quadratic coefficient.
        for (int j = 0; j < grid.size(); ++j) {
            double lam = etas.eta1 + etas.eta2 * chain.ws.k2()[j] +
                         etas.eta3 * chain.ws.k4()[j];
            if (!(lam > 0.0))
                throw std::invalid_argument(
                    "mcmc_sample: quadratic-only target is improper for "
                    "these coefficients");
        }
    }

    // Burn-in with multiplicative scale adaptation toward 0.4 acceptance;
    // the scale freezes afterwards so the measured chain is Markov.
    for (int s = 0; s < cfg.burn_in_sweeps; ++s) {
        double rate = chain.sweep();
        if (rate > 0.45)
            chain.scale *= 1.11;
        else if (rate < 0.35)
            chain.scale /= 1.11;
    }

    std::vector<double> pilot;
    pilot.reserve(cfg.pilot_sweeps);
    for (int s = 0; s < cfg.pilot_sweeps; ++s) {
        chain.sweep();
        pilot.push_back(chain.intensity());
    }
    double tau = integrated_autocorr(pilot);
    int thin = static_cast<int>(std::lround(2.0 * tau));
    if (thin < 1) thin = 1;

    McmcResult result;
    result.samples.reserve(cfg.n_samples);
    double rate_sum = 0.0;
    int rate_count = 0;
    for (int s = 0; s < cfg.n_samples; ++s) {
        for (int t = 0; t < thin; ++t) {
            rate_sum += chain.sweep();
            ++rate_count;
        }
        result.samples.push_back(chain.X);
    }
    result.acceptance_rate = rate_count > 0 ? rate_sum / rate_count : 0.0;
    result.proposal_scale = chain.scale;
    result.autocorr_sweeps = tau;
    result.thin = thin;
    result.acceptance_warning =
        result.acceptance_rate < 0.1 || result.acceptance_rate > 0.9;
    return result;
}

}  // namespace opo
