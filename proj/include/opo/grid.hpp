#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <fftw3.h>

namespace opo {

using Complex = std::complex<double>;
using ComplexField = std::vector<Complex>;

// Two-component real field, each component nx*ny row-major (index ix*ny + iy).
struct VectorField {
    std::vector<double> c1;
    std::vector<double> c2;
};

struct GridSpec {
    int nx = 0;
    int ny = 0;
    double lx = 0.0;
    double ly = 0.0;

    int size() const { return nx * ny; }
    double dx() const { return lx / nx; }
    double dy() const { return ly / ny; }
    double cell_area() const { return dx() * dy(); }
    double area() const { return lx * ly; }

    // Throws std::invalid_argument unless nx, ny are even and >= 8 and lx, ly > 0.
    void validate() const;
};

// Angular wavenumbers in FFT storage order: k[m] = 2*pi*m/L with
// m in {0, 1, ..., n/2-1, -n/2, ..., -1}. The most negative mode is kept.
std::vector<double> fft_wavenumbers(int n, double length);

// FFTW-backed transforms on one grid. Unitary convention: both directions
// divide by sqrt(nx*ny), so Parseval holds with equal weights on both sides.
// Plan creation is serialized internally; execution is safe from one thread
// per workspace. Plans use FFTW_ESTIMATE so the chosen algorithm does not
// depend on runtime timing (reruns stay byte-identical).
class SpectralWorkspace {
  public:
    explicit SpectralWorkspace(const GridSpec& spec);
    ~SpectralWorkspace();
    SpectralWorkspace(const SpectralWorkspace&) = delete;
    SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

    const GridSpec& spec() const { return spec_; }
    const std::vector<double>& kx() const { return kx_; }
    const std::vector<double>& ky() const { return ky_; }
    // |k|^2 and |k|^4 tables, flat row-major over (ix, iy).
    const std::vector<double>& k2() const { return k2_; }
    const std::vector<double>& k4() const { return k4_; }

    void transform_forward(const ComplexField& in, ComplexField& out);
    void transform_inverse(const ComplexField& in, ComplexField& out);

    // Multiplies in k-space by -k^2 (laplacian) or +k^4 (biharmonic).
    void laplacian(const ComplexField& in, ComplexField& out);
    void biharmonic(const ComplexField& in, ComplexField& out);

    // Component-wise spectral derivatives of a real vector field, done with a
    // single complex transform of c1 + i*c2 (multipliers are real and even).
    void laplacian(const VectorField& in, VectorField& out);
    void biharmonic(const VectorField& in, VectorField& out);

  private:
    void run_plan(fftw_plan plan, const ComplexField& in, ComplexField& out);
    void apply_multiplier(const ComplexField& in, ComplexField& out,
                          const std::vector<double>& mult);

    GridSpec spec_;
    std::vector<double> kx_, ky_, k2_, k4_;
    fftw_complex* buf_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan inv_ = nullptr;
    ComplexField scratch_;
};

// exp(-(eta1 + eta2*k^2 + eta3*k^4) * dt) per mode, flat row-major.
std::vector<double> linear_propagator(const SpectralWorkspace& ws, double eta1,
                                      double eta2, double eta3, double dt);

// The complex scalar X = c1 + i*c2 carries the same data as the two-component
// real field; integrators work on the complex form.
ComplexField pack_components(const VectorField& v);
VectorField unpack_components(const ComplexField& f);

// Field snapshot format: "OPOF" magic, then uint32 version (= 1), nx, ny,
// ncomp, followed by ncomp*nx*ny little-endian float64, row-major within a
// component, components back to back.
struct Snapshot {
    int nx = 0;
    int ny = 0;
    std::vector<std::vector<double>> components;
};

void write_snapshot(const std::string& path, int nx, int ny,
                    const std::vector<const std::vector<double>*>& components);
Snapshot read_snapshot(const std::string& path);

// Complex fields are stored as two components (real part, imaginary part).
void write_snapshot_complex(const std::string& path, int nx, int ny,
                            const std::vector<const ComplexField*>& fields);
std::vector<ComplexField> read_snapshot_complex(const std::string& path, int nx,
                                                int ny, int nfields);

}  // namespace opo
