#include "opo/config.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace opo {

namespace {

const std::set<std::string>& known_experiments() {
    static const std::set<std::string> names = {
        "scan-pump", "scan-detuning", "lifshitz",  "nongaussian",
        "spectrum",  "mcmc-check",    "selfcheck",
    };
    return names;
}

}  // namespace

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void RunConfig::validate() const {
    std::vector<std::string> problems;
    if (known_experiments().count(experiment) == 0)
        problems.push_back("unknown experiment '" + experiment + "'");
    if (preset != "desk" && preset != "paper")
        problems.push_back("preset must be 'desk' or 'paper'");
    try {
        grid().validate();
    } catch (const std::exception& e) {
        problems.push_back(e.what());
    }
    if (!(dt > 0.0)) problems.push_back("dt must be positive");
    if (!(equilibration >= 0.0)) problems.push_back("equilibration must be >= 0");
    if (!(duration >= 0.0)) problems.push_back("duration must be >= 0");
    if (trajectories < 2) problems.push_back("trajectories must be >= 2");
    if (trajectories >= (1 << 24))
        problems.push_back("trajectories must stay below 2^24");
    if (record_stride < 1) problems.push_back("record_stride must be >= 1");
    if (substeps < 1) problems.push_back("substeps must be >= 1");
    if (workers < 0) problems.push_back("workers must be >= 0");
    if (!(g > 0.0)) problems.push_back("g must be positive");
    if (!std::isfinite(mu)) problems.push_back("mu must be finite");
    if (!std::isfinite(delta)) problems.push_back("delta must be finite");
    if (scan) {
        try {
            scan->validate();
        } catch (const std::exception& e) {
            problems.push_back(e.what());
        }
    }
    if (!problems.empty()) {
        std::string msg = "invalid configuration:";
        for (const std::string& p : problems) msg += "\n  - " + p;
        throw std::invalid_argument(msg);
    }
}

std::string RunConfig::manifest_json() const {
    nlohmann::json j;
    j["experiment"] = experiment;
    j["preset"] = preset;
    j["nx"] = nx;
    j["ny"] = ny;
    j["lx"] = lx;
    j["ly"] = ly;
    j["dt"] = dt;
    j["equilibration"] = equilibration;
    j["duration"] = duration;
    j["trajectories"] = trajectories;
    j["record_stride"] = record_stride;
    j["substeps"] = substeps;
    j["seed"] = seed;
    j["g"] = g;
    j["mu"] = mu;
    j["delta"] = delta;
    j["out_dir"] = out_dir;
    j["save_snapshot"] = save_snapshot;
    if (scan) {
        j["scan"] = {
            {"parameter", scan->parameter == ScanParameter::mu ? "mu" : "delta"},
            {"start", scan->start},
            {"rate", scan->rate},
            {"end", scan->end},
        };
    } else {
        j["scan"] = nullptr;
    }
    return j.dump();
}

RunConfig preset_config(const std::string& experiment, const std::string& preset) {
    if (known_experiments().count(experiment) == 0)
        throw std::invalid_argument("unknown experiment '" + experiment + "'");
    if (preset != "desk" && preset != "paper")
        throw std::invalid_argument("preset must be 'desk' or 'paper'");
    const bool paper = preset == "paper";
    RunConfig c;
    c.experiment = experiment;
    c.preset = preset;
    if (experiment == "scan-pump") {
        ScanSchedule s{ScanParameter::mu, 0.9, 0.004, 1.1};
        c.scan = s;
        c.mu = s.start;
        if (paper) {
            c.nx = c.ny = 96;
            c.dt = 1.0 / 600.0;
            c.equilibration = 50.0;
            c.trajectories = 300;
            c.record_stride = 60;
        } else {
            c.nx = c.ny = 32;
            c.dt = 2e-3;
            c.equilibration = 10.0;
            c.trajectories = 128;
            c.record_stride = 50;
        }
        c.duration = s.duration();
    } else if (experiment == "scan-detuning") {
        ScanSchedule s{ScanParameter::delta, -0.5, 0.005, 0.5};
        c.scan = s;
        c.mu = 1.0;
        c.delta = s.start;
        if (paper) {
            c.nx = c.ny = 96;
            c.lx = c.ly = 50.0;
            c.dt = 1.0 / 75.0;
            c.equilibration = 20.0;
            c.trajectories = 60;
            c.record_stride = 15;
        } else {
            c.nx = c.ny = 32;
            c.dt = 2e-3;
            c.equilibration = 10.0;
            c.trajectories = 64;
            c.record_stride = 50;
        }
        c.duration = s.duration();
    } else if (experiment == "lifshitz" || experiment == "nongaussian") {
        c.mu = 1.0;
        c.delta = 0.0;
        if (paper) {
            c.trajectories = 3200;
            c.equilibration = 5.0;
            c.duration = 5.0;
        }
    } else if (experiment == "spectrum") {
        if (paper) {
            c.trajectories = 3200;
            c.equilibration = 5.0;
            c.duration = 5.0;
        } else {
            c.nx = c.ny = 32;
            c.dt = 2e-3;
            c.trajectories = 128;
            c.record_stride = 25;
        }
    } else if (experiment == "mcmc-check") {
        c.nx = c.ny = 16;
        c.lx = c.ly = 10.0;
        c.dt = 2e-3;
        c.equilibration = 25.0;
        c.duration = 25.0;
        c.trajectories = paper ? 256 : 96;
        c.record_stride = 100;
    }
    return c;
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::invalid_argument("config file '" + path + "': " + e.what());
    }
    if (!j.is_object())
        throw std::invalid_argument("config file '" + path +
                                    "' must contain a JSON object");
    std::vector<std::string> problems;
    auto number = [&](const nlohmann::json& v, const char* key, double& dst) {
        if (v.is_number())
            dst = v.get<double>();
        else
            problems.push_back(std::string(key) + ": expected a number");
    };
    auto integer = [&](const nlohmann::json& v, const char* key, int& dst) {
        if (v.is_number_integer())
            dst = v.get<int>();
        else
            problems.push_back(std::string(key) + ": expected an integer");
    };
    for (const auto& [key, value] : j.items()) {
        if (key == "nx") integer(value, "nx", cfg.nx);
        else if (key == "ny") integer(value, "ny", cfg.ny);
        else if (key == "lx") number(value, "lx", cfg.lx);
        else if (key == "ly") number(value, "ly", cfg.ly);
        else if (key == "dt") number(value, "dt", cfg.dt);
        else if (key == "equilibration")
            number(value, "equilibration", cfg.equilibration);
        else if (key == "duration") number(value, "duration", cfg.duration);
        else if (key == "trajectories")
            integer(value, "trajectories", cfg.trajectories);
        else if (key == "record_stride")
            integer(value, "record_stride", cfg.record_stride);
        else if (key == "substeps") integer(value, "substeps", cfg.substeps);
        else if (key == "seed") {
            if (value.is_number_unsigned() || value.is_number_integer())
                cfg.seed = value.get<uint64_t>();
            else
                problems.push_back("seed: expected an unsigned integer");
        } else if (key == "workers") integer(value, "workers", cfg.workers);
        else if (key == "g") number(value, "g", cfg.g);
        else if (key == "mu") number(value, "mu", cfg.mu);
        else if (key == "delta") number(value, "delta", cfg.delta);
        else if (key == "out_dir") {
            if (value.is_string())
                cfg.out_dir = value.get<std::string>();
            else
                problems.push_back("out_dir: expected a string");
        } else if (key == "save_snapshot") {
            if (value.is_boolean())
                cfg.save_snapshot = value.get<bool>();
            else
                problems.push_back("save_snapshot: expected a boolean");
        } else if (key == "scan") {
            if (value.is_null()) {
                cfg.scan.reset();
                continue;
            }
            if (!value.is_object()) {
                problems.push_back("scan: expected an object or null");
                continue;
            }
            ScanSchedule s;
            bool ok = true;
            for (const auto& [sk, sv] : value.items()) {
                if (sk == "parameter") {
                    if (sv == "mu") s.parameter = ScanParameter::mu;
                    else if (sv == "delta") s.parameter = ScanParameter::delta;
                    else {
                        problems.push_back("scan.parameter: must be 'mu' or 'delta'");
                        ok = false;
                    }
                } else if (sk == "start") number(sv, "scan.start", s.start);
                else if (sk == "rate") number(sv, "scan.rate", s.rate);
                else if (sk == "end") number(sv, "scan.end", s.end);
                else {
                    problems.push_back("unknown key 'scan." + sk + "'");
                    ok = false;
                }
            }
            if (ok) cfg.scan = s;
        } else {
            problems.push_back("unknown key '" + key + "'");
        }
    }
    if (!problems.empty()) {
        std::string msg = "config file '" + path + "':";
        for (const std::string& p : problems) msg += "\n  - " + p;
        throw std::invalid_argument(msg);
    }
}

CsvWriter::CsvWriter(const std::string& path, const RunConfig& cfg,
                     const std::string& columns)
    : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open output file '" + path + "'");
    out_ << "# experiment: " << cfg.experiment << "\n";
    out_ << "# version: " << kVersion << "\n";
    out_ << "# config: " << cfg.manifest_json() << "\n";
    out_ << columns << "\n";
}

void CsvWriter::row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out_ << ',';
        out_ << format_value(values[i]);
    }
    out_ << "\n";
}

}  // namespace opo
