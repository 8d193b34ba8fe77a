#include "opo/dynamics.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace opo {

namespace detail {
struct WorkerSpace {
    SpectralWorkspace ws;
    ComplexField u, u2, z, ha, hb;
    explicit WorkerSpace(const GridSpec& g)
        : ws(g),
          u(g.size()),
          u2(g.size()),
          z(g.size()),
          ha(g.size()),
          hb(g.size()) {}
};
}  // namespace detail

namespace {

// A site past this cap marks the trajectory as diverged. Positive-P
// trajectories can make rare boundary excursions; they are discarded and
// counted rather than allowed to contaminate ensemble means.
constexpr double kIntensityCap = 1.0e12;  // |field|^2, i.e. |field| > 1e6

// Spatial mean of |X|^2, or -1 if any site is non-finite or above the cap.
double checked_intensity(const ComplexField& X) {
    double sum = 0.0, comp = 0.0;
    for (const Complex& v : X) {
        double I = std::norm(v);
        if (!(I <= kIntensityCap)) return -1.0;
        double y = I - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum / static_cast<double>(X.size());
}

// Spatial mean of X^2 (no conjugation), compensated per component.
Complex square_mean(const ComplexField& X) {
    double sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0;
    for (const Complex& v : X) {
        Complex w = v * v;
        double yr = w.real() - cr;
        double tr = sr + yr;
        cr = (tr - sr) - yr;
        sr = tr;
        double yi = w.imag() - ci;
        double ti = si + yi;
        ci = (ti - si) - yi;
        si = ti;
    }
    double n = static_cast<double>(X.size());
    return {sr / n, si / n};
}

// X <- IFFT[prop .* FFT(u) + prop_half .* FFT(z)]; z may be null.
void spectral_combine(SpectralWorkspace& ws, ComplexField& X,
                      const ComplexField& u, const ComplexField* z,
                      const std::vector<double>& prop,
                      const std::vector<double>& prop_half, ComplexField& ha,
                      ComplexField& hb) {
    ws.transform_forward(u, ha);
    if (z != nullptr) {
        ws.transform_forward(*z, hb);
        for (std::size_t j = 0; j < ha.size(); ++j)
            ha[j] = prop[j] * ha[j] + prop_half[j] * hb[j];
    } else {
        for (std::size_t j = 0; j < ha.size(); ++j) ha[j] *= prop[j];
    }
    ws.transform_inverse(ha, X);
}

// Means over live trajectories, accumulated in trajectory order.
EnsembleStats live_stats(const std::vector<double>& intensity,
                         const std::vector<Complex>& square,
                         const std::vector<uint8_t>& failed) {
    double sm = 0.0, cm = 0.0, sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0;
    int live = 0;
    for (std::size_t i = 0; i < intensity.size(); ++i) {
        if (failed[i]) continue;
        ++live;
        double ym = intensity[i] - cm;
        double tm = sm + ym;
        cm = (tm - sm) - ym;
        sm = tm;
        double yr = square[i].real() - cr;
        double tr = sr + yr;
        cr = (tr - sr) - yr;
        sr = tr;
        double yi = square[i].imag() - ci;
        double ti = si + yi;
        ci = (ti - si) - yi;
        si = ti;
    }
    EnsembleStats st;
    if (live > 0) {
        st.mean_intensity = sm / live;
        st.mean_square = Complex(sr / live, si / live);
    }
    return st;
}

void check_ensemble_args(int n_traj, double dt, int substeps) {
    if (n_traj < 1) throw std::domain_error("ensemble needs at least one trajectory");
    if (n_traj >= (1 << 24))
        throw std::invalid_argument("trajectory count must stay below 2^24");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
}

}  // namespace

// ---------------------------------------------------------------------------
// SHStepper

SHStepper::SHStepper(SpectralWorkspace& ws, const EtaSet& etas, double dt)
    : ws_(ws),
      etas_(etas),
      dt_(dt),
      drift_(ws.spec().size()),
      noise_(ws.spec().size()),
      hat_a_(ws.spec().size()),
      hat_b_(ws.spec().size()) {
    if (!(dt > 0.0)) throw std::invalid_argument("SHStepper: dt must be positive");
    set_etas(etas);
}

void SHStepper::set_etas(const EtaSet& etas) {
    etas_ = etas;
    prop_ = linear_propagator(ws_, etas.eta1, etas.eta2, etas.eta3, dt_);
    prop_half_ = linear_propagator(ws_, etas.eta1, etas.eta2, etas.eta3, 0.5 * dt_);
}

StepStatus SHStepper::step(SHState& state, NoiseStream& stream) {
    if (state.failed) return StepStatus::failed;
    reduced_complex_noise(stream, ws_.spec(), dt_, noise_);
    for (std::size_t j = 0; j < noise_.size(); ++j) noise_[j] *= dt_;
    const ComplexField& X = state.X;
    for (std::size_t j = 0; j < X.size(); ++j)
        drift_[j] = X[j] * (1.0 - dt_ * std::norm(X[j]));
    spectral_combine(ws_, state.X, drift_, &noise_, prop_, prop_half_, hat_a_,
                     hat_b_);
    state.tau += dt_;
    if (checked_intensity(state.X) < 0.0) {
        state.failed = true;
        return StepStatus::failed;
    }
    return StepStatus::ok;
}

StepStatus SHStepper::step_deterministic(SHState& state) {
    if (state.failed) return StepStatus::failed;
    const ComplexField& X = state.X;
    for (std::size_t j = 0; j < X.size(); ++j)
        drift_[j] = X[j] * (1.0 - dt_ * std::norm(X[j]));
    spectral_combine(ws_, state.X, drift_, nullptr, prop_, prop_half_, hat_a_,
                     hat_b_);
    state.tau += dt_;
    if (checked_intensity(state.X) < 0.0) {
        state.failed = true;
        return StepStatus::failed;
    }
    return StepStatus::ok;
}

StepStatus SHStepper::step_rk4ip(SHState& state) {
    if (state.failed) return StepStatus::failed;
    const std::size_t n = state.X.size();
    ComplexField ai(n), k1(n), k2(n), k3(n), k4(n);
    auto nonlin = [this](const ComplexField& f, ComplexField& out) {
        for (std::size_t j = 0; j < f.size(); ++j)
            out[j] = -dt_ * std::norm(f[j]) * f[j];
    };
    auto half_prop = [this](const ComplexField& in, ComplexField& out) {
        ws_.transform_forward(in, hat_a_);
        for (std::size_t j = 0; j < hat_a_.size(); ++j) hat_a_[j] *= prop_half_[j];
        ws_.transform_inverse(hat_a_, out);
    };
    half_prop(state.X, ai);
    nonlin(state.X, drift_);
    half_prop(drift_, k1);
    for (std::size_t j = 0; j < n; ++j) drift_[j] = ai[j] + 0.5 * k1[j];
    nonlin(drift_, k2);
    for (std::size_t j = 0; j < n; ++j) drift_[j] = ai[j] + 0.5 * k2[j];
    nonlin(drift_, k3);
    for (std::size_t j = 0; j < n; ++j) drift_[j] = ai[j] + k3[j];
    half_prop(drift_, noise_);
    nonlin(noise_, k4);
    for (std::size_t j = 0; j < n; ++j)
        drift_[j] = ai[j] + k1[j] / 6.0 + k2[j] / 3.0 + k3[j] / 3.0;
    half_prop(drift_, state.X);
    for (std::size_t j = 0; j < n; ++j) state.X[j] += k4[j] / 6.0;
    state.tau += dt_;
    if (checked_intensity(state.X) < 0.0) {
        state.failed = true;
        return StepStatus::failed;
    }
    return StepStatus::ok;
}

StepStatus step_sh(SpectralWorkspace& ws, SHState& state, const EtaSet& etas,
                   double dt, NoiseStream& stream) {
    SHStepper stepper(ws, etas, dt);
    return stepper.step(state, stream);
}

// ---------------------------------------------------------------------------
// SHEnsemble

SHEnsemble::SHEnsemble(const GridSpec& grid, const EtaSet& etas, double dt,
                       int n_traj, uint64_t seed, int substeps)
    : grid_(grid), etas_(etas), dt_(dt), substeps_(substeps) {
    grid.validate();
    check_ensemble_args(n_traj, dt, substeps);
    fields_.assign(n_traj, ComplexField(grid.size(), Complex(0.0, 0.0)));
    intensity_.assign(n_traj, 0.0);
    failed_.assign(n_traj, 0);
    streams_.reserve(n_traj);
    for (int i = 0; i < n_traj; ++i)
        streams_.push_back(NoiseStream{seed, static_cast<uint32_t>(i),
                                       NoiseTag::reduced_field, 0,
                                       static_cast<uint32_t>(substeps)});
}

SHEnsemble::~SHEnsemble() = default;

void SHEnsemble::set_etas(const EtaSet& etas) {
    etas_ = etas;
    tables_dirty_ = true;
}

void SHEnsemble::ensure_workers(int n) {
    while (static_cast<int>(workers_.size()) < n)
        workers_.push_back(std::make_unique<detail::WorkerSpace>(grid_));
}

void SHEnsemble::refresh_tables() {
    ensure_workers(1);
    if (!tables_dirty_) return;
    prop_ = linear_propagator(workers_[0]->ws, etas_.eta1, etas_.eta2,
                              etas_.eta3, dt_);
    prop_half_ = linear_propagator(workers_[0]->ws, etas_.eta1, etas_.eta2,
                                   etas_.eta3, 0.5 * dt_);
    tables_dirty_ = false;
}

void SHEnsemble::step(ThreadPool& pool) {
    ensure_workers(pool.worker_count());
    refresh_tables();
    pool.parallel_for(size(), [&](int i, int w) {
        if (failed_[i]) return;
        detail::WorkerSpace& sp = *workers_[w];
        reduced_complex_noise(streams_[i], grid_, dt_, sp.z);
        for (std::size_t j = 0; j < sp.z.size(); ++j) sp.z[j] *= dt_;
        ComplexField& X = fields_[i];
        for (std::size_t j = 0; j < X.size(); ++j)
            sp.u[j] = X[j] * (1.0 - dt_ * std::norm(X[j]));
        spectral_combine(sp.ws, X, sp.u, &sp.z, prop_, prop_half_, sp.ha, sp.hb);
        double I = checked_intensity(X);
        if (I < 0.0)
            failed_[i] = 1;
        else
            intensity_[i] = I;
    });
    tau_ += dt_;
}

void SHEnsemble::step_deterministic(ThreadPool& pool) {
    ensure_workers(pool.worker_count());
    refresh_tables();
    pool.parallel_for(size(), [&](int i, int w) {
        if (failed_[i]) return;
        detail::WorkerSpace& sp = *workers_[w];
        ComplexField& X = fields_[i];
        for (std::size_t j = 0; j < X.size(); ++j)
            sp.u[j] = X[j] * (1.0 - dt_ * std::norm(X[j]));
        spectral_combine(sp.ws, X, sp.u, nullptr, prop_, prop_half_, sp.ha,
                         sp.hb);
        double I = checked_intensity(X);
        if (I < 0.0)
            failed_[i] = 1;
        else
            intensity_[i] = I;
    });
    tau_ += dt_;
}

int SHEnsemble::failed_count() const {
    int n = 0;
    for (uint8_t f : failed_) n += f != 0;
    return n;
}

SpectralWorkspace& SHEnsemble::workspace(int worker) {
    ensure_workers(worker + 1);
    return workers_[worker]->ws;
}

// ---------------------------------------------------------------------------
// GaussianEnsemble

GaussianEnsemble::GaussianEnsemble(const GridSpec& grid, const EtaSet& etas,
                                   double dt, int n_traj, uint64_t seed,
                                   int substeps)
    : grid_(grid), etas_(etas), dt_(dt), substeps_(substeps) {
    grid.validate();
    check_ensemble_args(n_traj, dt, substeps);
    fields_.assign(n_traj, ComplexField(grid.size(), Complex(0.0, 0.0)));
    intensity_.assign(n_traj, 0.0);
    square_.assign(n_traj, Complex(0.0, 0.0));
    failed_.assign(n_traj, 0);
    streams_.reserve(n_traj);
    for (int i = 0; i < n_traj; ++i)
        streams_.push_back(NoiseStream{seed, static_cast<uint32_t>(i),
                                       NoiseTag::reduced_field, 0,
                                       static_cast<uint32_t>(substeps)});
}

GaussianEnsemble::~GaussianEnsemble() = default;

void GaussianEnsemble::set_etas(const EtaSet& etas) {
    etas_ = etas;
    tables_dirty_ = true;
}

void GaussianEnsemble::ensure_workers(int n) {
    while (static_cast<int>(workers_.size()) < n)
        workers_.push_back(std::make_unique<detail::WorkerSpace>(grid_));
}

void GaussianEnsemble::refresh_tables() {
    ensure_workers(1);
    if (!tables_dirty_) return;
    prop_ = linear_propagator(workers_[0]->ws, etas_.eta1, etas_.eta2,
                              etas_.eta3, dt_);
    prop_half_ = linear_propagator(workers_[0]->ws, etas_.eta1, etas_.eta2,
                                   etas_.eta3, 0.5 * dt_);
    tables_dirty_ = false;
}

void GaussianEnsemble::recompute_stats() {
    stats_ = live_stats(intensity_, square_, failed_);
}

void GaussianEnsemble::step(ThreadPool& pool) {
    ensure_workers(pool.worker_count());
    refresh_tables();
    // Shared self-consistent averages enter at their start-of-step values;
    // they are refreshed only after the whole batch advanced.
    const double a = 1.0 - 2.0 * stats_.mean_intensity * dt_;
    const Complex b = 2.0 * dt_ * stats_.mean_square;
    pool.parallel_for(size(), [&](int i, int w) {
        if (failed_[i]) return;
        detail::WorkerSpace& sp = *workers_[w];
        reduced_complex_noise(streams_[i], grid_, dt_, sp.z);
        for (std::size_t j = 0; j < sp.z.size(); ++j) sp.z[j] *= dt_;
        ComplexField& X = fields_[i];
        for (std::size_t j = 0; j < X.size(); ++j)
            sp.u[j] = a * X[j] - b * std::conj(X[j]);
        spectral_combine(sp.ws, X, sp.u, &sp.z, prop_, prop_half_, sp.ha, sp.hb);
        double I = checked_intensity(X);
        if (I < 0.0) {
            failed_[i] = 1;
        } else {
            intensity_[i] = I;
            square_[i] = square_mean(X);
        }
    });
    tau_ += dt_;
    recompute_stats();
}

int GaussianEnsemble::failed_count() const {
    int n = 0;
    for (uint8_t f : failed_) n += f != 0;
    return n;
}

SpectralWorkspace& GaussianEnsemble::workspace(int worker) {
    ensure_workers(worker + 1);
    return workers_[worker]->ws;
}

// ---------------------------------------------------------------------------
// PairedEnsemble

PairedEnsemble::PairedEnsemble(const GridSpec& grid, const EtaSet& etas,
                               double dt, int n_traj, uint64_t seed,
                               int substeps)
    : grid_(grid), etas_(etas), dt_(dt), substeps_(substeps) {
    grid.validate();
    check_ensemble_args(n_traj, dt, substeps);
    mf_.assign(n_traj, ComplexField(grid.size(), Complex(0.0, 0.0)));
    delta_.assign(n_traj, ComplexField(grid.size(), Complex(0.0, 0.0)));
    mf_intensity_.assign(n_traj, 0.0);
    full_intensity_.assign(n_traj, 0.0);
    correction_.assign(n_traj, 0.0);
    square_.assign(n_traj, Complex(0.0, 0.0));
    failed_.assign(n_traj, 0);
    streams_.reserve(n_traj);
    for (int i = 0; i < n_traj; ++i)
        streams_.push_back(NoiseStream{seed, static_cast<uint32_t>(i),
                                       NoiseTag::reduced_field, 0,
                                       static_cast<uint32_t>(substeps)});
}

PairedEnsemble::~PairedEnsemble() = default;

void PairedEnsemble::ensure_workers(int n) {
    while (static_cast<int>(workers_.size()) < n)
        workers_.push_back(std::make_unique<detail::WorkerSpace>(grid_));
}

void PairedEnsemble::refresh_tables() {
    ensure_workers(1);
    if (!tables_dirty_) return;
    prop_ = linear_propagator(workers_[0]->ws, etas_.eta1, etas_.eta2,
                              etas_.eta3, dt_);
    prop_half_ = linear_propagator(workers_[0]->ws, etas_.eta1, etas_.eta2,
                                   etas_.eta3, 0.5 * dt_);
    tables_dirty_ = false;
}

void PairedEnsemble::recompute_stats() {
    stats_ = live_stats(mf_intensity_, square_, failed_);
}

void PairedEnsemble::step(ThreadPool& pool) {
    ensure_workers(pool.worker_count());
    refresh_tables();
    // The difference field is only meaningful while its mean-field partner
    // consumes the noise stream in lockstep, one sample per step.
    for (int i = 0; i < size(); ++i)
        if (!failed_[i] && streams_[i].step != steps_taken_)
            throw std::logic_error(
                "difference update: noise stream out of step with its "
                "mean-field trajectory");
    const double m = stats_.mean_intensity;
    const Complex s2 = 2.0 * stats_.mean_square;
    const double a = 1.0 - 2.0 * m * dt_;
    pool.parallel_for(size(), [&](int i, int w) {
        if (failed_[i]) return;
        detail::WorkerSpace& sp = *workers_[w];
        reduced_complex_noise(streams_[i], grid_, dt_, sp.z);
        for (std::size_t j = 0; j < sp.z.size(); ++j) sp.z[j] *= dt_;
        ComplexField& Xt = mf_[i];
        ComplexField& D = delta_[i];
        // Both drifts are taken from the pre-step fields. The difference
        // variable obeys d(Delta) = D~ Delta + [full drift at X~+Delta minus
        // Gaussian drift at X~]; the noise terms are identical in the two
        // equations and drop out of Delta exactly.
        for (std::size_t j = 0; j < Xt.size(); ++j) {
            Complex xf = Xt[j] + D[j];
            sp.u2[j] = D[j] + dt_ * (-std::norm(xf) * xf + 2.0 * m * Xt[j] +
                                     s2 * std::conj(Xt[j]));
            sp.u[j] = a * Xt[j] - dt_ * s2 * std::conj(Xt[j]);
        }
        spectral_combine(sp.ws, D, sp.u2, nullptr, prop_, prop_half_, sp.ha,
                         sp.hb);
        spectral_combine(sp.ws, Xt, sp.u, &sp.z, prop_, prop_half_, sp.ha,
                         sp.hb);
        double Imf = checked_intensity(Xt);
        if (Imf < 0.0) {
            failed_[i] = 1;
            return;
        }
        // Full intensity and the correction <|X|^2> - <|X~|^2> in one pass;
        // the correction is accumulated directly from 2 Re(X~* D) + |D|^2 so
        // the small difference is not lost to cancellation.
        double sf = 0.0, cf = 0.0, sc = 0.0, cc = 0.0;
        bool bad = false;
        for (std::size_t j = 0; j < Xt.size(); ++j) {
            double If = std::norm(Xt[j] + D[j]);
            if (!(If <= kIntensityCap)) {
                bad = true;
                break;
            }
            double yf = If - cf;
            double tf = sf + yf;
            cf = (tf - sf) - yf;
            sf = tf;
            double corr =
                2.0 * (std::conj(Xt[j]) * D[j]).real() + std::norm(D[j]);
            double yc = corr - cc;
            double tc = sc + yc;
            cc = (tc - sc) - yc;
            sc = tc;
        }
        if (bad) {
            failed_[i] = 1;
            return;
        }
        double n = static_cast<double>(Xt.size());
        mf_intensity_[i] = Imf;
        full_intensity_[i] = sf / n;
        correction_[i] = sc / n;
        square_[i] = square_mean(Xt);
    });
    ++steps_taken_;
    tau_ += dt_;
    recompute_stats();
}

int PairedEnsemble::failed_count() const {
    int n = 0;
    for (uint8_t f : failed_) n += f != 0;
    return n;
}

SpectralWorkspace& PairedEnsemble::workspace(int worker) {
    ensure_workers(worker + 1);
    return workers_[worker]->ws;
}

ComplexField PairedEnsemble::reconstruct(int traj) const {
    const ComplexField& Xt = mf_[traj];
    const ComplexField& D = delta_[traj];
    ComplexField out(Xt.size());
    for (std::size_t j = 0; j < Xt.size(); ++j) out[j] = Xt[j] + D[j];
    return out;
}

// ---------------------------------------------------------------------------
// Full positive-P model

FullModelParams FullModelParams::from_physical(const PhysicalParams& p) {
    p.validate();
    DimensionlessParams d = derive_scales(p);
    double x02 = d.x0 * d.x0;
    FullModelParams f;
    f.gamma0t = p.gamma0_tilde();
    f.gamma1t = p.gamma_tilde();
    f.gamma2t = p.gamma_tilde();
    f.chi = p.chi;
    f.chi_grid = p.chi / x02;
    f.pump = p.pump;
    f.diff1 = p.v * p.v / (2.0 * p.omega * x02);
    f.diff2 = f.diff1;
    // The pump carrier sits at twice the signal frequency.
    f.diff0 = p.v * p.v / (2.0 * (2.0 * p.omega) * x02);
    return f;
}

FullStepper::FullStepper(SpectralWorkspace& ws, const FullModelParams& params,
                         double dt, PumpMode mode)
    : ws_(ws), p_(params), dt_(dt), mode_(mode) {
    if (!(dt > 0.0)) throw std::invalid_argument("FullStepper: dt must be positive");
    const int n = ws.spec().size();
    xi_.resize(n);
    xip_.resize(n);
    a0_.resize(n);
    a0p_.resize(n);
    u0_.resize(n);
    u1_.resize(n);
    u2_.resize(n);
    u1p_.resize(n);
    u2p_.resize(n);
    n1_.resize(n);
    n2_.resize(n);
    n1p_.resize(n);
    n2p_.resize(n);
    hat_a_.resize(n);
    hat_b_.resize(n);
    p0_.resize(n);
    p1_.resize(n);
    p2_.resize(n);
    p1c_.resize(n);
    p2c_.resize(n);
    p0h_.resize(n);
    p1h_.resize(n);
    p2h_.resize(n);
    p1ch_.resize(n);
    p2ch_.resize(n);
    const Complex im(0.0, 1.0);
    const std::vector<double>& k2 = ws.k2();
    for (int j = 0; j < n; ++j) {
        // i*d*Lap acts as -i*d*k^2 per mode; conjugate fields see the complex
        // conjugate symbol, so their propagator is the elementwise conjugate.
        Complex L0 = -p_.gamma0t - im * (p_.diff0 * k2[j]);
        Complex L1 = -p_.gamma1t - im * (p_.diff1 * k2[j]);
        Complex L2 = -p_.gamma2t - im * (p_.diff2 * k2[j]);
        p0_[j] = std::exp(L0 * dt_);
        p1_[j] = std::exp(L1 * dt_);
        p2_[j] = std::exp(L2 * dt_);
        p0h_[j] = std::exp(L0 * (0.5 * dt_));
        p1h_[j] = std::exp(L1 * (0.5 * dt_));
        p2h_[j] = std::exp(L2 * (0.5 * dt_));
        p1c_[j] = std::conj(p1_[j]);
        p2c_[j] = std::conj(p2_[j]);
        p1ch_[j] = std::conj(p1h_[j]);
        p2ch_[j] = std::conj(p2h_[j]);
    }
}

void FullStepper::init_vacuum(FullState& state) const {
    const int n = ws_.spec().size();
    state.A1.assign(n, Complex(0.0, 0.0));
    state.A2.assign(n, Complex(0.0, 0.0));
    state.A1p.assign(n, Complex(0.0, 0.0));
    state.A2p.assign(n, Complex(0.0, 0.0));
    if (mode_ == PumpMode::resolved)
        state.A0.assign(n, Complex(0.0, 0.0));
    else
        state.A0.clear();
    state.t = 0.0;
    state.failed = false;
}

void FullStepper::init_below_threshold(FullState& state, Complex signal_seed) const {
    init_vacuum(state);
    const int n = ws_.spec().size();
    if (mode_ == PumpMode::resolved)
        state.A0.assign(n, p_.pump / p_.gamma0t);
    state.A1.assign(n, signal_seed);
    state.A2.assign(n, signal_seed);
    state.A1p.assign(n, std::conj(signal_seed));
    state.A2p.assign(n, std::conj(signal_seed));
}

void FullStepper::propagate(ComplexField& field, const ComplexField& u,
                            const std::vector<Complex>& prop,
                            const ComplexField* noise_term,
                            const std::vector<Complex>& prop_half) {
    ws_.transform_forward(u, hat_a_);
    if (noise_term != nullptr) {
        ws_.transform_forward(*noise_term, hat_b_);
        for (std::size_t j = 0; j < hat_a_.size(); ++j)
            hat_a_[j] = prop[j] * hat_a_[j] + prop_half[j] * hat_b_[j];
    } else {
        for (std::size_t j = 0; j < hat_a_.size(); ++j) hat_a_[j] *= prop[j];
    }
    ws_.transform_inverse(hat_a_, field);
}

void FullStepper::slaved_pump(const FullState& s, ComplexField& a0,
                              ComplexField& a0p) const {
    const std::size_t n = s.A1.size();
    a0.resize(n);
    a0p.resize(n);
    const Complex g0 = p_.gamma0t;
    const Complex g0c = std::conj(p_.gamma0t);
    for (std::size_t j = 0; j < n; ++j) {
        a0[j] = (p_.pump - p_.chi_grid * s.A1[j] * s.A2[j]) / g0;
        a0p[j] = (p_.pump - p_.chi_grid * s.A1p[j] * s.A2p[j]) / g0c;
    }
}

StepStatus FullStepper::advance(FullState& s, NoiseStream* stream) {
    if (s.failed) return StepStatus::failed;
    const std::size_t n = static_cast<std::size_t>(ws_.spec().size());
    if (s.A1.size() != n || s.A2.size() != n || s.A1p.size() != n ||
        s.A2p.size() != n)
        throw std::invalid_argument("field size does not match the grid");
    if (mode_ == PumpMode::resolved && s.A0.size() != n)
        throw std::invalid_argument("resolved pump mode needs an A0 field");
    const bool noisy = stream != nullptr;
    if (noisy) pair_noise(*stream, ws_.spec(), dt_, xi_, xip_);

    const ComplexField* a0;
    const ComplexField* a0p;
    if (mode_ == PumpMode::adiabatic) {
        slaved_pump(s, a0_, a0p_);
        a0 = &a0_;
        a0p = &a0p_;
    } else {
        // The pump conjugate is not carried as state; it enters the signal
        // drift as conj(A0), which is exact for all classical solutions.
        for (std::size_t j = 0; j < n; ++j) a0p_[j] = std::conj(s.A0[j]);
        a0 = &s.A0;
        a0p = &a0p_;
    }

    // All drift and noise inputs come from the pre-step fields.
    for (std::size_t j = 0; j < n; ++j) {
        Complex c0 = p_.chi * (*a0)[j];
        Complex c0p = p_.chi * (*a0p)[j];
        u1_[j] = s.A1[j] + dt_ * (c0 * s.A2p[j]);
        u2_[j] = s.A2[j] + dt_ * (c0 * s.A1p[j]);
        u1p_[j] = s.A1p[j] + dt_ * (c0p * s.A2[j]);
        u2p_[j] = s.A2p[j] + dt_ * (c0p * s.A1[j]);
        if (noisy) {
            Complex r = std::sqrt(c0);
            Complex rp = std::sqrt(c0p);
            n1_[j] = dt_ * r * xi_[j];
            n2_[j] = dt_ * r * std::conj(xi_[j]);
            n1p_[j] = dt_ * rp * xip_[j];
            n2p_[j] = dt_ * rp * std::conj(xip_[j]);
        }
    }
    if (mode_ == PumpMode::resolved)
        for (std::size_t j = 0; j < n; ++j)
            u0_[j] = s.A0[j] +
                     dt_ * (p_.pump - p_.chi_grid * s.A1[j] * s.A2[j]);

    propagate(s.A1, u1_, p1_, noisy ? &n1_ : nullptr, p1h_);
    propagate(s.A2, u2_, p2_, noisy ? &n2_ : nullptr, p2h_);
    propagate(s.A1p, u1p_, p1c_, noisy ? &n1p_ : nullptr, p1ch_);
    propagate(s.A2p, u2p_, p2c_, noisy ? &n2p_ : nullptr, p2ch_);
    if (mode_ == PumpMode::resolved) propagate(s.A0, u0_, p0_, nullptr, p0h_);

    s.t += dt_;
    if (checked_intensity(s.A1) < 0.0 || checked_intensity(s.A2) < 0.0 ||
        checked_intensity(s.A1p) < 0.0 || checked_intensity(s.A2p) < 0.0) {
        s.failed = true;
        return StepStatus::failed;
    }
    return StepStatus::ok;
}

StepStatus FullStepper::step(FullState& state, NoiseStream& stream) {
    return advance(state, &stream);
}

StepStatus FullStepper::step_deterministic(FullState& state) {
    return advance(state, nullptr);
}

StepStatus step_full(SpectralWorkspace& ws, FullState& state,
                     const FullModelParams& params, double dt,
                     NoiseStream& stream, PumpMode mode) {
    FullStepper stepper(ws, params, dt, mode);
    return stepper.step(state, stream);
}

// ---------------------------------------------------------------------------
// Quadratures and schedules

QuadratureFields quadratures_from_modes(const ComplexField& a1,
                                        const ComplexField& a2p,
                                        const ComplexField& a2,
                                        const ComplexField& a1p, double g) {
    if (!(g > 0.0)) throw std::invalid_argument("g must be positive");
    const std::size_t n = a1.size();
    if (a2p.size() != n || a2.size() != n || a1p.size() != n)
        throw std::invalid_argument("mode fields must share one grid");
    const double rg = std::sqrt(g);
    const Complex inv_i(0.0, -1.0);
    QuadratureFields q;
    q.X.resize(n);
    q.Xp.resize(n);
    q.Y.resize(n);
    q.Yp.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        q.X[j] = rg * (a1[j] + a2p[j]);
        q.Xp[j] = rg * (a2[j] + a1p[j]);
        q.Y[j] = inv_i * (a1[j] - a2p[j]);
        q.Yp[j] = inv_i * (a2[j] - a1p[j]);
    }
    return q;
}

void ScanSchedule::validate() const {
    if (!std::isfinite(start) || !std::isfinite(rate) || !std::isfinite(end))
        throw std::invalid_argument("scan endpoints and rate must be finite");
    if (rate == 0.0) throw std::invalid_argument("scan rate must be nonzero");
    if (!((end - start) / rate > 0.0))
        throw std::invalid_argument("scan rate must point from start toward end");
}

double ScanSchedule::value_at(double tau_from_start) const {
    double v = start + rate * tau_from_start;
    if (rate > 0.0) return v < end ? v : end;
    return v > end ? v : end;
}

void evolve(SHEnsemble& ensemble, ThreadPool& pool, double g, double mu,
            double delta, const std::optional<ScanSchedule>& scan,
            double tau_span, int record_stride,
            const std::function<void(const ScanRow&)>& record) {
    if (!(tau_span >= 0.0)) throw std::invalid_argument("tau_span must be >= 0");
    if (record_stride < 1)
        throw std::invalid_argument("record_stride must be >= 1");
    if (scan) scan->validate();
    const double tau0 = ensemble.tau();
    double mu_cur = mu;
    double delta_cur = delta;
    auto apply_value = [&](double v) {
        if (scan->parameter == ScanParameter::mu)
            mu_cur = v;
        else
            delta_cur = v;
    };
    ensemble.set_etas(reduced_coefficients(mu_cur, delta_cur, g));
    const long n_steps = std::lround(tau_span / ensemble.dt());
    for (long s = 0; s < n_steps; ++s) {
        if (scan) {
            apply_value(scan->value_at(ensemble.tau() - tau0));
            ensemble.set_etas(reduced_coefficients(mu_cur, delta_cur, g));
        }
        ensemble.step(pool);
        if ((s + 1) % record_stride == 0 || s + 1 == n_steps) {
            // Rows describe the post-step state, so the ramp value and the
            // eta columns are taken at the post-step time.
            if (scan) apply_value(scan->value_at(ensemble.tau() - tau0));
            ScanRow row;
            row.tau = ensemble.tau();
            row.param_value = (scan && scan->parameter == ScanParameter::delta)
                                  ? delta_cur
                                  : mu_cur;
            row.etas = reduced_coefficients(mu_cur, delta_cur, g);
            std::vector<double> live;
            live.reserve(ensemble.size());
            for (int i = 0; i < ensemble.size(); ++i)
                if (!ensemble.traj_failed(i)) live.push_back(ensemble.intensities()[i]);
            row.intensity = ensemble_estimate(live);
            record(row);
        }
    }
}

}  // namespace opo
