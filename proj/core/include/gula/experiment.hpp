// experiment.hpp — orchestration: dataset/graph preparation, trial execution
// across a worker pool, the T sweep, and result emission.
#pragma once

#include "gula/config.hpp"
#include "gula/engine.hpp"
#include "gula/ingest.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gula {

// Everything a run needs, prepared once and shared read-only by trials.
struct PreparedExperiment {
    Graph graph;
    GossipPairDistribution dist;
    ModelSpec model;
    std::vector<DataShard> shards;
    std::optional<std::pair<double, double>> analytic_posterior;  // toy
    Eigen::MatrixXd test_inputs;                                   // classification
    std::vector<int> test_labels;
    int dropped_remainder = 0;
    int dropped_unlabeled = 0;
    double toy_theta_truth = 0.0;  // parameter the toy data was drawn from
};

PreparedExperiment prepare_experiment(const RunConfig& config);

TrialContext make_trial_context(const RunConfig& config, const PreparedExperiment& prep);

// Lipschitz probe estimate + condition report for the prepared experiment.
ConditionReport evaluate_conditions(const RunConfig& config, const PreparedExperiment& prep);

// One arm of a run (a single T value of the sweep, or the configured mode).
struct ArmResult {
    std::string label;
    std::vector<RunRecord> records;
    ConditionReport conditions;
    // mean +- sd across trials of the last recorded KL (toy) or of the
    // per-agent-averaged final accuracy (classification)
    double final_metric_mean = 0.0;
    double final_metric_sd = 0.0;
    bool any_diverged = false;
};

// Full run: every sweep arm, trials parallel across workers, CSV per trial
// plus run.json per arm under config.out_dir. Returns the process exit code
// (non-zero when any trial diverged).
int run_experiment(const RunConfig& config);

// `check-conditions` verb: prepare, estimate, report (printed + returned).
ConditionReport check_conditions_verb(const RunConfig& config, bool print);

// `fit-rates` verb: fit decay rates for every trial CSV in a results
// directory, print a table, and write rates.json next to the inputs.
int fit_rates_dir(const std::string& results_dir);

}  // namespace gula
