#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "opo/grid.hpp"

namespace opo {

struct EnsembleEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    int n = 0;
};

// Compensated (Kahan) sum in the given order. Used for every ensemble
// reduction so results are independent of worker count and stable under
// trajectory relabeling to ~1e-12 relative.
double kahan_sum(const std::vector<double>& values);

// Mean and between-sample standard error of per-trajectory values. Spatial
// averaging inside a trajectory is variance reduction, not extra samples:
// only the trajectory count enters the error bar.
EnsembleEstimate ensemble_estimate(const std::vector<double>& per_trajectory);

// Spatial mean of X.X for one field.
double field_intensity(const VectorField& f, const GridSpec& grid);
double field_intensity(const ComplexField& f, const GridSpec& grid);

// Spatial-and-ensemble average of X1^2 + X2^2; needs >= 2 trajectories.
EnsembleEstimate mean_intensity(const std::vector<VectorField>& ensemble,
                                const GridSpec& grid);
EnsembleEstimate mean_intensity(const std::vector<ComplexField>& ensemble,
                                const GridSpec& grid);

// Trace spectral density on the k-grid: S(k) = <|X_hat(k)|^2> * dA with the
// unitary transform, so the linear (OU) steady state reproduces
// 1/(eta1' + eta2 k^2 + eta3 k^4) mode by mode, and
// mean_intensity = (1/Area) * sum_k S(k) exactly (Parseval).
struct Spectrum2D {
    GridSpec grid;
    std::vector<double> S;  // flat row-major over (ix, iy)
};

Spectrum2D momentum_spectrum(const std::vector<ComplexField>& ensemble,
                             SpectralWorkspace& ws);
// Accumulation form used by the runners: adds |X_hat|^2*dA of one field.
void accumulate_spectrum(SpectralWorkspace& ws, const ComplexField& field,
                         std::vector<double>& accum);

struct RadialSpectrum {
    std::vector<double> k;        // bin centers
    std::vector<double> S;        // bin means
    std::vector<double> stderr_;  // zero when built from a single spectrum
    std::vector<int> count;       // modes per bin
};

// Annular bins of width dk = 2*pi/max(lx, ly) covering [0, k_max].
RadialSpectrum radial_average(const Spectrum2D& spectrum);
// Between-trajectory error bars from per-trajectory spectra.
RadialSpectrum radial_average(const std::vector<Spectrum2D>& per_trajectory);
// Same binning applied to an analytic radial profile f(|k|) on this grid.
RadialSpectrum radial_average_function(const SpectralWorkspace& ws,
                                       const std::function<double(double)>& f);

// <X(r).X(r+d)> for lattice separations, via inverse transform of the
// ensemble-averaged spectrum (Wiener-Khinchin on the torus). Returned values
// are indexed like the grid: entry (ix, iy) is the separation
// (ix*dx, iy*dy) with periodic wrap.
std::vector<double> spatial_correlation(const std::vector<ComplexField>& ensemble,
                                        SpectralWorkspace& ws);

// Final observables of one run plus the identifiers that must match for a
// step-refinement comparison to be meaningful.
struct RunSummary {
    uint64_t seed = 0;
    double dt = 0.0;
    int substeps = 1;
    std::string schedule;
    std::vector<std::pair<std::string, double>> observables;
};

struct ConvergenceEntry {
    std::string name;
    double coarse = 0.0;
    double fine = 0.0;
    double abs_diff = 0.0;
};

// Per-observable |coarse - fine| as the discretization error estimate.
// Throws std::logic_error unless the runs share seed and schedule and the
// fine run refines the coarse step (same noise path via CRN substeps).
std::vector<ConvergenceEntry> step_convergence(const RunSummary& coarse,
                                               const RunSummary& fine);

}  // namespace opo
