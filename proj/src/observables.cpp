#include "opo/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace opo {

double kahan_sum(const std::vector<double>& values) {
    // Neumaier's variant: unlike textbook Kahan it also compensates when the
    // incoming term is larger than the running sum.
    double sum = 0.0, comp = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    return sum + comp;
}

EnsembleEstimate ensemble_estimate(const std::vector<double>& per_trajectory) {
    if (per_trajectory.size() < 2)
        throw std::domain_error("observables: need >= 2 samples for an estimate");
    const int n = static_cast<int>(per_trajectory.size());
    const double mean = kahan_sum(per_trajectory) / n;
    std::vector<double> sq(per_trajectory.size());
    for (size_t i = 0; i < per_trajectory.size(); ++i) {
        const double d = per_trajectory[i] - mean;
        sq[i] = d * d;
    }
    const double var = kahan_sum(sq) / (n - 1);
    return {mean, std::sqrt(var / n), n};
}

double field_intensity(const VectorField& f, const GridSpec& grid) {
    const size_t n = static_cast<size_t>(grid.size());
    if (f.c1.size() != n || f.c2.size() != n)
        throw std::invalid_argument("observables: field size mismatch");
    double sum = 0.0, comp = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double v = f.c1[i] * f.c1[i] + f.c2[i] * f.c2[i];
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum / static_cast<double>(n);
}

double field_intensity(const ComplexField& f, const GridSpec& grid) {
    const size_t n = static_cast<size_t>(grid.size());
    if (f.size() != n)
        throw std::invalid_argument("observables: field size mismatch");
    double sum = 0.0, comp = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double v = std::norm(f[i]);
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum / static_cast<double>(n);
}

EnsembleEstimate mean_intensity(const std::vector<VectorField>& ensemble,
                                const GridSpec& grid) {
    std::vector<double> per(ensemble.size());
    for (size_t i = 0; i < ensemble.size(); ++i)
        per[i] = field_intensity(ensemble[i], grid);
    return ensemble_estimate(per);
}

EnsembleEstimate mean_intensity(const std::vector<ComplexField>& ensemble,
                                const GridSpec& grid) {
    std::vector<double> per(ensemble.size());
    for (size_t i = 0; i < ensemble.size(); ++i)
        per[i] = field_intensity(ensemble[i], grid);
    return ensemble_estimate(per);
}

void accumulate_spectrum(SpectralWorkspace& ws, const ComplexField& field,
                         std::vector<double>& accum) {
    const int n = ws.spec().size();
    accum.resize(n, 0.0);
    static thread_local ComplexField hat;
    ws.transform_forward(field, hat);
    const double da = ws.spec().cell_area();
    for (int i = 0; i < n; ++i) accum[i] += std::norm(hat[i]) * da;
}

Spectrum2D momentum_spectrum(const std::vector<ComplexField>& ensemble,
                             SpectralWorkspace& ws) {
    if (ensemble.empty())
        throw std::domain_error("observables: empty ensemble");
    Spectrum2D out;
    out.grid = ws.spec();
    const int n = out.grid.size();
    out.S.assign(n, 0.0);
    for (const auto& f : ensemble) accumulate_spectrum(ws, f, out.S);
    const double inv = 1.0 / static_cast<double>(ensemble.size());
    for (double& s : out.S) s *= inv;
    return out;
}

namespace {

struct RadialBins {
    double dk;
    int nbins;
    std::vector<int> bin_of_mode;
    std::vector<int> count;
};

RadialBins make_bins(const GridSpec& grid, const std::vector<double>& kx,
                     const std::vector<double>& ky) {
    RadialBins b;
    b.dk = 2.0 * std::numbers::pi / std::max(grid.lx, grid.ly);
    double kmax = 0.0;
    b.bin_of_mode.resize(grid.size());
    for (int ix = 0; ix < grid.nx; ++ix)
        for (int iy = 0; iy < grid.ny; ++iy) {
            const double k = std::hypot(kx[ix], ky[iy]);
            kmax = std::max(kmax, k);
            b.bin_of_mode[ix * grid.ny + iy] =
                static_cast<int>(std::floor(k / b.dk + 0.5));
        }
    b.nbins = static_cast<int>(std::floor(kmax / b.dk + 0.5)) + 1;
    b.count.assign(b.nbins, 0);
    for (int i : b.bin_of_mode) ++b.count[i];
    return b;
}

}  // namespace

RadialSpectrum radial_average(const Spectrum2D& spectrum) {
    const GridSpec& g = spectrum.grid;
    const auto kx = fft_wavenumbers(g.nx, g.lx);
    const auto ky = fft_wavenumbers(g.ny, g.ly);
    const RadialBins b = make_bins(g, kx, ky);
    RadialSpectrum out;
    out.k.resize(b.nbins);
    out.S.assign(b.nbins, 0.0);
    out.stderr_.assign(b.nbins, 0.0);
    out.count = b.count;
    for (int i = 0; i < g.size(); ++i) out.S[b.bin_of_mode[i]] += spectrum.S[i];
    for (int j = 0; j < b.nbins; ++j) {
        out.k[j] = j * b.dk;
        if (b.count[j] > 0) out.S[j] /= b.count[j];
    }
    return out;
}

RadialSpectrum radial_average(const std::vector<Spectrum2D>& per_trajectory) {
    if (per_trajectory.size() < 2)
        throw std::domain_error("observables: need >= 2 spectra for error bars");
    const int ntraj = static_cast<int>(per_trajectory.size());
    RadialSpectrum first = radial_average(per_trajectory[0]);
    const int nbins = static_cast<int>(first.k.size());
    std::vector<std::vector<double>> binned(nbins, std::vector<double>(ntraj));
    for (int t = 0; t < ntraj; ++t) {
        RadialSpectrum r = (t == 0) ? first : radial_average(per_trajectory[t]);
        for (int j = 0; j < nbins; ++j) binned[j][t] = r.S[j];
    }
    RadialSpectrum out;
    out.k = first.k;
    out.count = first.count;
    out.S.resize(nbins);
    out.stderr_.resize(nbins);
    for (int j = 0; j < nbins; ++j) {
        const EnsembleEstimate e = ensemble_estimate(binned[j]);
        out.S[j] = e.mean;
        out.stderr_[j] = e.stderr_;
    }
    return out;
}

RadialSpectrum radial_average_function(const SpectralWorkspace& ws,
                                       const std::function<double(double)>& f) {
    Spectrum2D spec;
    spec.grid = ws.spec();
    spec.S.resize(spec.grid.size());
    for (int i = 0; i < spec.grid.size(); ++i)
        spec.S[i] = f(std::sqrt(ws.k2()[i]));
    return radial_average(spec);
}

std::vector<double> spatial_correlation(const std::vector<ComplexField>& ensemble,
                                        SpectralWorkspace& ws) {
    Spectrum2D spec = momentum_spectrum(ensemble, ws);
    const int n = ws.spec().size();
    // C(d) = (1/Area) sum_k S(k) e^{ik.d}: inverse unitary transform of S
    // carries 1/sqrt(N); the remaining factor is 1/(dA*sqrt(N)) * dA/Area...
    // assembled so that C(0) reproduces the mean intensity exactly.
    ComplexField sk(n), cd;
    for (int i = 0; i < n; ++i) sk[i] = Complex(spec.S[i], 0.0);
    ws.transform_inverse(sk, cd);
    const double scale =
        1.0 / (ws.spec().area() / std::sqrt(static_cast<double>(n)));
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = cd[i].real() * scale;
    return out;
}

std::vector<ConvergenceEntry> step_convergence(const RunSummary& coarse,
                                               const RunSummary& fine) {
    if (coarse.seed != fine.seed)
        throw std::logic_error("step_convergence: seed mismatch");
    if (coarse.schedule != fine.schedule)
        throw std::logic_error("step_convergence: schedule mismatch");
    const double ratio = coarse.dt / fine.dt;
    const double nearest = std::round(ratio);
    if (!(ratio >= 1.0) || std::abs(ratio - nearest) > 1e-9)
        throw std::logic_error("step_convergence: fine dt must divide coarse dt");
    if (coarse.substeps != static_cast<int>(nearest) * fine.substeps)
        throw std::logic_error("step_convergence: CRN substeps mismatch");
    std::vector<ConvergenceEntry> out;
    for (const auto& [name, cval] : coarse.observables) {
        for (const auto& [fname, fval] : fine.observables) {
            if (fname == name) {
                out.push_back({name, cval, fval, std::abs(cval - fval)});
                break;
            }
        }
    }
    if (out.empty())
        throw std::logic_error("step_convergence: no shared observables");
    return out;
}

}  // namespace opo
