#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "opo/grid.hpp"
#include "opo/noise.hpp"
#include "opo/observables.hpp"
#include "opo/params.hpp"
#include "opo/thread_pool.hpp"

namespace opo {

// Reduced-field state. X packs the two real polarization components as
// X1 + i*X2; with real initial data and zero noise both descriptions stay
// identical under the reduced equation.
struct SHState {
    ComplexField X;
    double tau = 0.0;
    bool failed = false;
};

enum class StepStatus { ok, failed };

// One Euler-Maruyama step in the interaction picture:
//   X <- P(dt) * (X + dt*N(X)) + P(dt/2) * (dt*zeta),
// P the exact linear propagator and N the cubic drift. Propagating the noise
// by a half step makes each linear mode's steady variance exact to
// O((lambda*dt)^2) instead of O(lambda*dt), which the stiff k^4 corner of the
// grid needs. A deterministic RK4-IP variant serves convergence checks.
class SHStepper {
  public:
    SHStepper(SpectralWorkspace& ws, const EtaSet& etas, double dt);

    void set_etas(const EtaSet& etas);
    const EtaSet& etas() const { return etas_; }
    double dt() const { return dt_; }

    StepStatus step(SHState& state, NoiseStream& stream);
    StepStatus step_deterministic(SHState& state);
    StepStatus step_rk4ip(SHState& state);

  private:
    SpectralWorkspace& ws_;
    EtaSet etas_;
    double dt_;
    std::vector<double> prop_, prop_half_;
    ComplexField drift_, noise_, hat_a_, hat_b_;
    friend class GaussianEnsemble;
    friend class PairedEnsemble;
};

// Convenience single-step entry point.
StepStatus step_sh(SpectralWorkspace& ws, SHState& state, const EtaSet& etas,
                   double dt, NoiseStream& stream);

// Shared statistics of a mean-field ensemble, evaluated over all sites and
// all live trajectories at the start of a step.
struct EnsembleStats {
    double mean_intensity = 0.0;  // <|X~|^2>
    Complex mean_square = 0.0;    // <X~^2>
};

namespace detail {
struct WorkerSpace;
}

// Batch-synchronous ensemble of independent reduced-field trajectories.
// Trajectory i always consumes noise stream (seed, i), so results are
// identical for any worker count.
class SHEnsemble {
  public:
    SHEnsemble(const GridSpec& grid, const EtaSet& etas, double dt, int n_traj,
               uint64_t seed, int substeps = 1);
    ~SHEnsemble();

    void set_etas(const EtaSet& etas);
    void step(ThreadPool& pool);
    void step_deterministic(ThreadPool& pool);

    double tau() const { return tau_; }
    double dt() const { return dt_; }
    const GridSpec& grid() const { return grid_; }
    int size() const { return static_cast<int>(fields_.size()); }
    const std::vector<ComplexField>& fields() const { return fields_; }
    std::vector<ComplexField>& fields() { return fields_; }
    const std::vector<double>& intensities() const { return intensity_; }
    int failed_count() const;
    bool traj_failed(int i) const { return failed_[i] != 0; }
    std::vector<NoiseStream>& streams() { return streams_; }
    SpectralWorkspace& workspace(int worker);

  private:
    void ensure_workers(int n);
    void refresh_tables();

    GridSpec grid_;
    EtaSet etas_;
    double dt_;
    double tau_ = 0.0;
    int substeps_;
    bool tables_dirty_ = true;
    std::vector<double> prop_, prop_half_;
    std::vector<ComplexField> fields_;
    std::vector<NoiseStream> streams_;
    std::vector<double> intensity_;
    std::vector<uint8_t> failed_;
    std::vector<std::unique_ptr<detail::WorkerSpace>> workers_;
};

// Self-consistent Gaussian ensemble: every trajectory is advanced with the
// shared start-of-step statistics
//   dX~ = [D X~ - 2<|X~|^2> X~ - 2<X~^2> conj(X~)] dtau + zeta dtau.
class GaussianEnsemble {
  public:
    GaussianEnsemble(const GridSpec& grid, const EtaSet& etas, double dt,
                     int n_traj, uint64_t seed, int substeps = 1);
    ~GaussianEnsemble();

    void set_etas(const EtaSet& etas);
    void step(ThreadPool& pool);

    double tau() const { return tau_; }
    const GridSpec& grid() const { return grid_; }
    int size() const { return static_cast<int>(fields_.size()); }
    const std::vector<ComplexField>& fields() const { return fields_; }
    const EnsembleStats& stats() const { return stats_; }
    const std::vector<double>& intensities() const { return intensity_; }
    // Per-trajectory spatial means of X~^2 (complex second moment).
    const std::vector<Complex>& squares() const { return square_; }
    int failed_count() const;
    bool traj_failed(int i) const { return failed_[i] != 0; }
    std::vector<NoiseStream>& streams() { return streams_; }
    SpectralWorkspace& workspace(int worker);

  private:
    void ensure_workers(int n);
    void recompute_stats();
    void refresh_tables();

    GridSpec grid_;
    EtaSet etas_;
    double dt_;
    double tau_ = 0.0;
    int substeps_;
    bool tables_dirty_ = true;
    std::vector<double> prop_, prop_half_;
    std::vector<ComplexField> fields_;
    std::vector<NoiseStream> streams_;
    std::vector<double> intensity_;
    std::vector<Complex> square_;
    std::vector<uint8_t> failed_;
    EnsembleStats stats_;
    std::vector<std::unique_ptr<detail::WorkerSpace>> workers_;
};

// Mean-field trajectories paired with common-random-number difference fields
// Delta = X - X~. The noise enters X and X~ identically, so the Delta update
//   Delta <- P(dt) * [Delta + dt*(N_full(X~+Delta) - N_mf(X~))]
// contains no noise term at all; sampling error cancels analytically rather
// than by subtracting two noisy runs.
class PairedEnsemble {
  public:
    PairedEnsemble(const GridSpec& grid, const EtaSet& etas, double dt,
                   int n_traj, uint64_t seed, int substeps = 1);
    ~PairedEnsemble();

    void step(ThreadPool& pool);

    double tau() const { return tau_; }
    const GridSpec& grid() const { return grid_; }
    int size() const { return static_cast<int>(mf_.size()); }
    const std::vector<ComplexField>& mean_fields() const { return mf_; }
    const std::vector<ComplexField>& difference_fields() const { return delta_; }
    const EnsembleStats& stats() const { return stats_; }
    // Per-trajectory spatial means of |X~|^2, |X|^2 (X = X~+Delta), and the
    // correction 2 Re(conj(X~) Delta) + |Delta|^2.
    const std::vector<double>& mf_intensities() const { return mf_intensity_; }
    const std::vector<double>& full_intensities() const { return full_intensity_; }
    const std::vector<double>& corrections() const { return correction_; }
    int failed_count() const;
    bool traj_failed(int i) const { return failed_[i] != 0; }
    std::vector<NoiseStream>& streams() { return streams_; }
    SpectralWorkspace& workspace(int worker);
    // Reconstructs X = X~ + Delta for one trajectory.
    ComplexField reconstruct(int traj) const;

  private:
    void ensure_workers(int n);
    void recompute_stats();
    void refresh_tables();

    GridSpec grid_;
    EtaSet etas_;
    double dt_;
    double tau_ = 0.0;
    int substeps_;
    bool tables_dirty_ = true;
    uint64_t steps_taken_ = 0;
    std::vector<double> prop_, prop_half_;
    std::vector<ComplexField> mf_;
    std::vector<ComplexField> delta_;
    std::vector<NoiseStream> streams_;
    std::vector<double> mf_intensity_;
    std::vector<double> full_intensity_;
    std::vector<double> correction_;
    std::vector<Complex> square_;
    std::vector<uint8_t> failed_;
    EnsembleStats stats_;
    std::vector<std::unique_ptr<detail::WorkerSpace>> workers_;
};

// Positive-P two-mode model. Signal-sector fields are stored in the
// dimensionless alpha = x0*A scaling on the x0-unit grid, so the pair noise
// is unit-delta-correlated in grid coordinates; the pump A0 keeps its raw
// amplitude. In adiabatic mode the pump is slaved algebraically,
// A0 = (E - (chi/x0^2) A1 A2)/gamma0~, and the A0 member stays empty.
struct FullState {
    ComplexField A0, A1, A2, A1p, A2p;
    double t = 0.0;
    bool failed = false;
};

enum class PumpMode { adiabatic, resolved };

struct FullModelParams {
    std::complex<double> gamma0t, gamma1t, gamma2t;  // gamma_i*(1 + i*delta_i)
    double chi = 0.0;        // parametric coupling (noise amplitude scale)
    double chi_grid = 0.0;   // chi/x0^2: pump depletion scale in alpha units
    double pump = 0.0;       // E, real (phase fixed to 0)
    double diff0 = 0.0, diff1 = 0.0, diff2 = 0.0;  // v^2/(2 omega x0^2)

    // Degenerate mapping from physical inputs; x0 from derive_scales.
    static FullModelParams from_physical(const PhysicalParams& p);
};

class FullStepper {
  public:
    FullStepper(SpectralWorkspace& ws, const FullModelParams& params, double dt,
                PumpMode mode);

    PumpMode mode() const { return mode_; }
    double dt() const { return dt_; }

    void init_vacuum(FullState& state) const;
    // Homogeneous classical pump, empty signal fields (plus optional seed).
    void init_below_threshold(FullState& state, Complex signal_seed = 0.0) const;

    StepStatus step(FullState& state, NoiseStream& stream);
    StepStatus step_deterministic(FullState& state);

  private:
    StepStatus advance(FullState& state, NoiseStream* stream);
    void propagate(ComplexField& field, const ComplexField& u,
                   const std::vector<Complex>& prop,
                   const ComplexField* noise_term,
                   const std::vector<Complex>& prop_half);
    void slaved_pump(const FullState& s, ComplexField& a0, ComplexField& a0p) const;

    SpectralWorkspace& ws_;
    FullModelParams p_;
    double dt_;
    PumpMode mode_;
    std::vector<Complex> p0_, p1_, p2_, p1c_, p2c_;
    std::vector<Complex> p0h_, p1h_, p2h_, p1ch_, p2ch_;
    ComplexField xi_, xip_, a0_, a0p_;
    ComplexField u0_, u1_, u2_, u1p_, u2p_;
    ComplexField n1_, n2_, n1p_, n2p_;
    ComplexField hat_a_, hat_b_;
};

StepStatus step_full(SpectralWorkspace& ws, FullState& state,
                     const FullModelParams& params, double dt,
                     NoiseStream& stream, PumpMode mode);

// Scaled quadratures X = sqrt(g)(a1 + a2p), Y = (a1 - a2p)/i and their
// conjugate partners from the alpha-scaled mode fields.
struct QuadratureFields {
    ComplexField X, Xp, Y, Yp;
};
QuadratureFields quadratures_from_modes(const ComplexField& a1,
                                        const ComplexField& a2p,
                                        const ComplexField& a2,
                                        const ComplexField& a1p, double g);

enum class ScanParameter { mu, delta };

struct ScanSchedule {
    ScanParameter parameter = ScanParameter::mu;
    double start = 0.0;
    double rate = 0.0;
    double end = 0.0;

    void validate() const;
    double duration() const { return (end - start) / rate; }
    double value_at(double tau_from_start) const;
};

struct ScanRow {
    double tau = 0.0;
    double param_value = 0.0;
    EnsembleEstimate intensity;
    EtaSet etas;
};

// Advances an ensemble of reduced-field trajectories under fixed parameters
// or a linear parameter ramp, re-deriving (eta1, eta2, eta3) every step while
// the ramp is active, and recording every record_stride steps.
void evolve(SHEnsemble& ensemble, ThreadPool& pool, double g, double mu,
            double delta, const std::optional<ScanSchedule>& scan,
            double tau_span, int record_stride,
            const std::function<void(const ScanRow&)>& record);

}  // namespace opo
