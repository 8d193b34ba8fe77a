#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "opo/dynamics.hpp"
#include "opo/grid.hpp"

namespace opo {

inline constexpr const char* kVersion = "1.0.0";

// One experiment run: grid, integration window, ensemble, parameters, and an
// optional linear parameter ramp. Values resolve in three layers: built-in
// preset defaults, then a JSON config file, then command-line flags.
struct RunConfig {
    std::string experiment = "lifshitz";
    std::string preset = "desk";
    int nx = 48;
    int ny = 48;
    double lx = 20.0;
    double ly = 20.0;
    double dt = 1e-3;
    double equilibration = 10.0;  // tau spent before measurements start
    double duration = 10.0;       // averaging window or scan span, in tau
    int trajectories = 400;
    int record_stride = 50;  // steps between recorded rows
    int substeps = 1;        // noise refinement level (step-halving studies)
    uint64_t seed = 0;
    int workers = 0;  // 0: OPO_NUM_WORKERS, then hardware count
    double g = 0.01;
    double mu = 1.0;
    double delta = 0.0;
    std::optional<ScanSchedule> scan;
    std::string out_dir = "out";
    bool save_snapshot = false;

    GridSpec grid() const { return {nx, ny, lx, ly}; }
    // Throws std::invalid_argument listing every violated constraint.
    void validate() const;
    // Compact single-line JSON of all fields; alphabetical keys, so the same
    // config always serializes to the same bytes.
    std::string manifest_json() const;
};

// Built-in defaults for an (experiment, preset) pair. Desk presets fit a
// laptop budget; paper presets mirror the published ensemble sizes.
// Throws std::invalid_argument for unknown names.
RunConfig preset_config(const std::string& experiment, const std::string& preset);

// Applies keys from a JSON object file onto cfg. Unknown keys and type
// mismatches are collected and reported in one std::invalid_argument.
void apply_config_file(RunConfig& cfg, const std::string& path);

// CSV file whose first lines are a manifest header sufficient to re-run the
// experiment: experiment name, code version, and the full config JSON.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const RunConfig& cfg,
              const std::string& columns);
    // Writes one row; floats carry 17 significant digits.
    void row(const std::vector<double>& values);

  private:
    std::ofstream out_;
};

// Formats one double with 17 significant digits.
std::string format_value(double v);

}  // namespace opo
