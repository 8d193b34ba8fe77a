#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "opo/config.hpp"
#include "opo/experiments.hpp"

namespace {

// Flag values land here; only flags the user actually set override the
// preset/file layers.
struct Overrides {
    std::optional<std::string> config_path;
    std::optional<uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out_dir;
    std::optional<double> g, mu, delta, dt, lx, ly, equilibration, duration;
    std::optional<int> nx, ny, trajectories, record_stride, substeps;
    bool save_snapshot = false;
};

void add_common_options(CLI::App* sub, std::string* preset, Overrides* o) {
    sub->add_option("--config", o->config_path,
                    "JSON config file applied over the preset");
    sub->add_option("--preset", *preset, "Built-in defaults: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--seed", o->seed, "Base RNG seed");
    sub->add_option("--workers", o->workers,
                    "Worker threads (0: OPO_NUM_WORKERS, then hardware)");
    sub->add_option("--out", o->out_dir, "Output directory");
    sub->add_option("--g", o->g, "Fluctuation strength g");
    sub->add_option("--mu", o->mu, "Pump relative to threshold");
    sub->add_option("--delta", o->delta, "Signal detuning");
    sub->add_option("--dt", o->dt, "Time step in tau units");
    sub->add_option("--nx", o->nx, "Grid points along x");
    sub->add_option("--ny", o->ny, "Grid points along y");
    sub->add_option("--lx", o->lx, "Box length along x");
    sub->add_option("--ly", o->ly, "Box length along y");
    sub->add_option("--trajectories", o->trajectories, "Ensemble size");
    sub->add_option("--equilibration", o->equilibration,
                    "Settling time before measurements, in tau");
    sub->add_option("--duration", o->duration,
                    "Averaging window or scan span, in tau");
    sub->add_option("--record-stride", o->record_stride,
                    "Steps between recorded rows");
    sub->add_option("--substeps", o->substeps,
                    "Noise substeps per step (refinement studies)");
    sub->add_flag("--save-snapshot", o->save_snapshot,
                  "Also write a final field snapshot");
}

void apply_overrides(opo::RunConfig& cfg, const Overrides& o) {
    if (o.seed) cfg.seed = *o.seed;
    if (o.workers) cfg.workers = *o.workers;
    if (o.out_dir) cfg.out_dir = *o.out_dir;
    if (o.g) cfg.g = *o.g;
    if (o.mu) cfg.mu = *o.mu;
    if (o.delta) cfg.delta = *o.delta;
    if (o.dt) cfg.dt = *o.dt;
    if (o.nx) cfg.nx = *o.nx;
    if (o.ny) cfg.ny = *o.ny;
    if (o.lx) cfg.lx = *o.lx;
    if (o.ly) cfg.ly = *o.ly;
    if (o.trajectories) cfg.trajectories = *o.trajectories;
    if (o.equilibration) cfg.equilibration = *o.equilibration;
    if (o.duration) cfg.duration = *o.duration;
    if (o.record_stride) cfg.record_stride = *o.record_stride;
    if (o.substeps) cfg.substeps = *o.substeps;
    if (o.save_snapshot) cfg.save_snapshot = true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Stochastic simulations of a planar parametric oscillator near "
        "threshold: reduced-field ensembles, Gaussian self-consistent "
        "comparisons, and stationary-measure cross-checks"};
    app.require_subcommand(1);

    const struct {
        const char* name;
        const char* help;
    } kSubcommands[] = {
        {"scan-pump", "Ramp the pump through threshold, recording <|X|^2>"},
        {"scan-detuning", "Ramp the detuning at fixed pump"},
        {"lifshitz", "Paired Gaussian/full run at fixed parameters"},
        {"nongaussian", "Paired run plus momentum-resolved difference spectra"},
        {"spectrum", "Steady-state momentum spectrum at fixed parameters"},
        {"mcmc-check", "Compare dynamics against Metropolis sampling"},
        {"selfcheck", "Fast analytic self-tests, no simulation"},
    };

    std::string preset = "desk";
    Overrides o;
    for (const auto& s : kSubcommands)
        add_common_options(app.add_subcommand(s.name, s.help), &preset, &o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const std::string experiment = app.get_subcommands().front()->get_name();
    try {
        opo::RunConfig cfg = opo::preset_config(experiment, preset);
        if (o.config_path) opo::apply_config_file(cfg, *o.config_path);
        apply_overrides(cfg, o);
        return opo::run_experiment(cfg);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
