// config.hpp — run configuration: presets for the three built-in experiments
// plus overrides from a JSON config file.
#pragma once

#include "gula/graph.hpp"
#include "gula/models.hpp"
#include "gula/scheduler.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gula {

enum class ExperimentKind { gaussian_toy, gamma_telescope, mhealth, custom };

struct GraphConfig {
    GraphKind kind = GraphKind::ring;
    int n = 5;
    std::string edge_file;  // custom kind only
};

struct ToyConfig {
    double sigma_theta = 1.0;
    double sigma_x = 5.0;
    int n_data = 50;
};

struct DataConfig {
    std::string path;               // gamma telescope CSV
    std::string dir;                // mhealth per-subject logs
    double test_fraction = 0.2;     // gamma telescope holdout
    int subsample_per_agent = 0;    // mhealth; 0 = keep everything
};

struct LipschitzConfig {
    int probes = 1000;
    double radius = 5.0;
};

struct RunConfig {
    ExperimentKind experiment = ExperimentKind::gaussian_toy;
    // custom experiments pick the model family explicitly
    ModelKind model_kind = ModelKind::gaussian1d;
    GraphConfig graph;
    HyperParams hyper;
    int64_t cycles = 1;
    int trials = 1;
    int chains = 1;
    int64_t metric_cadence = 1;
    uint64_t master_seed = 1;
    std::vector<int> t_sweep;  // non-empty: one run arm per static T
    ToyConfig toy;
    DataConfig data;
    Prior prior{PriorKind::gaussian, 0.0, 20.0};  // classification prior
    std::optional<double> rho_u;
    LipschitzConfig lipschitz;
    std::string out_dir = "out";
    int workers = 0;  // 0 = hardware concurrency

    void validate() const;  // throws ValidationError with the field path
};

// Fully-populated defaults per experiment.
RunConfig preset_config(ExperimentKind kind);

// Preset for the file's "experiment", overridden by any fields present.
// Throws ParseError / ValidationError.
RunConfig load_config(const std::string& path);

// Resolved configuration (defaults included) as pretty JSON, embedded in run
// metadata so every default is on record.
std::string config_to_json(const RunConfig& config);

const char* experiment_name(ExperimentKind kind);

}  // namespace gula
