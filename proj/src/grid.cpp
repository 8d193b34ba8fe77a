#include "opo/grid.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace opo {

static_assert(std::endian::native == std::endian::little,
              "snapshot I/O assumes a little-endian host");

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

void GridSpec::validate() const {
    if (nx < 8 || ny < 8 || nx % 2 != 0 || ny % 2 != 0)
        throw std::invalid_argument("grid: nx, ny must be even and >= 8");
    if (!(lx > 0.0) || !(ly > 0.0))
        throw std::invalid_argument("grid: lx, ly must be positive");
}

std::vector<double> fft_wavenumbers(int n, double length) {
    std::vector<double> k(n);
    const double dk = 2.0 * std::numbers::pi / length;
    for (int m = 0; m < n; ++m)
        k[m] = dk * (m < n / 2 ? m : m - n);
    return k;
}

SpectralWorkspace::SpectralWorkspace(const GridSpec& spec) : spec_(spec) {
    spec_.validate();
    kx_ = fft_wavenumbers(spec_.nx, spec_.lx);
    ky_ = fft_wavenumbers(spec_.ny, spec_.ly);
    const int n = spec_.size();
    k2_.resize(n);
    k4_.resize(n);
    for (int ix = 0; ix < spec_.nx; ++ix)
        for (int iy = 0; iy < spec_.ny; ++iy) {
            const double k2 = kx_[ix] * kx_[ix] + ky_[iy] * ky_[iy];
            k2_[ix * spec_.ny + iy] = k2;
            k4_[ix * spec_.ny + iy] = k2 * k2;
        }
    scratch_.resize(n);
    std::lock_guard<std::mutex> lock(planner_mutex());
    buf_ = fftw_alloc_complex(n);
    fwd_ = fftw_plan_dft_2d(spec_.nx, spec_.ny, buf_, buf_, FFTW_FORWARD,
                            FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_2d(spec_.nx, spec_.ny, buf_, buf_, FFTW_BACKWARD,
                            FFTW_ESTIMATE);
    if (!fwd_ || !inv_) throw std::runtime_error("grid: fftw plan creation failed");
}

SpectralWorkspace::~SpectralWorkspace() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd_) fftw_destroy_plan(fwd_);
    if (inv_) fftw_destroy_plan(inv_);
    if (buf_) fftw_free(buf_);
}

void SpectralWorkspace::run_plan(fftw_plan plan, const ComplexField& in,
                                 ComplexField& out) {
    const int n = spec_.size();
    if (static_cast<int>(in.size()) != n)
        throw std::invalid_argument("grid: field size does not match grid");
    out.resize(n);
    std::memcpy(buf_, in.data(), sizeof(Complex) * n);
    fftw_execute(plan);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    const Complex* b = reinterpret_cast<const Complex*>(buf_);
    for (int i = 0; i < n; ++i) out[i] = b[i] * norm;
}

void SpectralWorkspace::transform_forward(const ComplexField& in,
                                          ComplexField& out) {
    run_plan(fwd_, in, out);
}

void SpectralWorkspace::transform_inverse(const ComplexField& in,
                                          ComplexField& out) {
    run_plan(inv_, in, out);
}

void SpectralWorkspace::apply_multiplier(const ComplexField& in,
                                         ComplexField& out,
                                         const std::vector<double>& mult) {
    transform_forward(in, scratch_);
    const int n = spec_.size();
    for (int i = 0; i < n; ++i) scratch_[i] *= mult[i];
    transform_inverse(scratch_, out);
}

void SpectralWorkspace::laplacian(const ComplexField& in, ComplexField& out) {
    transform_forward(in, scratch_);
    const int n = spec_.size();
    for (int i = 0; i < n; ++i) scratch_[i] *= -k2_[i];
    transform_inverse(scratch_, out);
}

void SpectralWorkspace::biharmonic(const ComplexField& in, ComplexField& out) {
    apply_multiplier(in, out, k4_);
}

ComplexField pack_components(const VectorField& v) {
    ComplexField f(v.c1.size());
    for (size_t i = 0; i < v.c1.size(); ++i) f[i] = Complex(v.c1[i], v.c2[i]);
    return f;
}

VectorField unpack_components(const ComplexField& f) {
    VectorField v;
    v.c1.resize(f.size());
    v.c2.resize(f.size());
    for (size_t i = 0; i < f.size(); ++i) {
        v.c1[i] = f[i].real();
        v.c2[i] = f[i].imag();
    }
    return v;
}

void SpectralWorkspace::laplacian(const VectorField& in, VectorField& out) {
    ComplexField res;
    laplacian(pack_components(in), res);
    out = unpack_components(res);
}

void SpectralWorkspace::biharmonic(const VectorField& in, VectorField& out) {
    ComplexField res;
    biharmonic(pack_components(in), res);
    out = unpack_components(res);
}

std::vector<double> linear_propagator(const SpectralWorkspace& ws, double eta1,
                                      double eta2, double eta3, double dt) {
    const int n = ws.spec().size();
    std::vector<double> p(n);
    const auto& k2 = ws.k2();
    const auto& k4 = ws.k4();
    for (int i = 0; i < n; ++i)
        p[i] = std::exp(-(eta1 + eta2 * k2[i] + eta3 * k4[i]) * dt);
    return p;
}

namespace {
constexpr char kMagic[4] = {'O', 'P', 'O', 'F'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& os, uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}
uint32_t get_u32(std::istream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
}  // namespace

void write_snapshot(const std::string& path, int nx, int ny,
                    const std::vector<const std::vector<double>*>& components) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("snapshot: cannot open " + path);
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    put_u32(os, static_cast<uint32_t>(nx));
    put_u32(os, static_cast<uint32_t>(ny));
    put_u32(os, static_cast<uint32_t>(components.size()));
    const size_t n = static_cast<size_t>(nx) * ny;
    for (const auto* comp : components) {
        if (comp->size() != n)
            throw std::invalid_argument("snapshot: component size mismatch");
        os.write(reinterpret_cast<const char*>(comp->data()),
                 static_cast<std::streamsize>(n * sizeof(double)));
    }
    if (!os) throw std::runtime_error("snapshot: write failed for " + path);
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("snapshot: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("snapshot: bad magic in " + path);
    const uint32_t version = get_u32(is);
    if (version != kVersion)
        throw std::runtime_error("snapshot: unsupported version in " + path);
    Snapshot snap;
    snap.nx = static_cast<int>(get_u32(is));
    snap.ny = static_cast<int>(get_u32(is));
    const uint32_t ncomp = get_u32(is);
    if (!is || snap.nx <= 0 || snap.ny <= 0)
        throw std::runtime_error("snapshot: bad header in " + path);
    const size_t n = static_cast<size_t>(snap.nx) * snap.ny;
    snap.components.resize(ncomp);
    for (auto& comp : snap.components) {
        comp.resize(n);
        is.read(reinterpret_cast<char*>(comp.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
    }
    if (!is) throw std::runtime_error("snapshot: truncated file " + path);
    return snap;
}

void write_snapshot_complex(const std::string& path, int nx, int ny,
                            const std::vector<const ComplexField*>& fields) {
    const size_t n = static_cast<size_t>(nx) * ny;
    std::vector<std::vector<double>> comps;
    comps.reserve(fields.size() * 2);
    for (const auto* f : fields) {
        if (f->size() != n)
            throw std::invalid_argument("snapshot: field size mismatch");
        std::vector<double> re(n), im(n);
        for (size_t i = 0; i < n; ++i) {
            re[i] = (*f)[i].real();
            im[i] = (*f)[i].imag();
        }
        comps.push_back(std::move(re));
        comps.push_back(std::move(im));
    }
    std::vector<const std::vector<double>*> ptrs;
    ptrs.reserve(comps.size());
    for (const auto& c : comps) ptrs.push_back(&c);
    write_snapshot(path, nx, ny, ptrs);
}

std::vector<ComplexField> read_snapshot_complex(const std::string& path, int nx,
                                                int ny, int nfields) {
    Snapshot snap = read_snapshot(path);
    if (snap.nx != nx || snap.ny != ny ||
        snap.components.size() != static_cast<size_t>(2 * nfields))
        throw std::runtime_error("snapshot: layout mismatch in " + path);
    const size_t n = static_cast<size_t>(nx) * ny;
    std::vector<ComplexField> fields(nfields);
    for (int f = 0; f < nfields; ++f) {
        fields[f].resize(n);
        const auto& re = snap.components[2 * f];
        const auto& im = snap.components[2 * f + 1];
        for (size_t i = 0; i < n; ++i) fields[f][i] = Complex(re[i], im[i]);
    }
    return fields;
}

}  // namespace opo
