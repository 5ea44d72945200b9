// metrics.hpp — reported quantities: consensus error, sample KL against the
// analytic Gaussian posterior, classification accuracy, decay-rate fits, and
// the Lipschitz probe estimator.
#pragma once

#include "gula/models.hpp"
#include "gula/state.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gula {

// sum_i ||w_i - mean(w)||^2
double consensus_error_sq(const SwarmState& state);

// KL( N(mu_s, var_s) || N(mu_p, var_p) ); tiny negative rounding clamped to 0.
double kl_gaussian_from_moments(double mu_s, double var_s, double mu_p, double var_p);

// Moments from samples (unbiased variance), then the closed form.
// Throws DegenerateSamples on fewer than 2 samples or zero variance.
double kl_gaussian_vs_analytic(std::span<const double> samples, double mu_p, double var_p);

// Delta-method standard error of the KL estimate above for `count` samples,
// floored by the second-order chi-square term that dominates near the target
// (where the delta method degenerates to zero).
double kl_standard_error(double mu_s, double var_s, double mu_p, double var_p, int64_t count);

// Per-agent test accuracy; agent i predicts with its own posterior samples.
std::vector<double> accuracy(const ModelSpec& model,
                             const std::vector<std::vector<Eigen::VectorXd>>& samples_per_agent,
                             const Eigen::MatrixXd& inputs, const std::vector<int>& labels);

struct DecayFit {
    double exponent = 0.0;   // value ~ amplitude * (k+1)^-exponent
    double amplitude = 0.0;
    double r_squared = 0.0;
};

// Least squares of log(value) on log(k+1) over points with k >= burn_in.
// Throws InsufficientData (< 20 points) or NonPositiveValues.
DecayFit fit_decay_rate(std::span<const std::pair<int64_t, double>> series, int64_t burn_in);

// max over agents and probe pairs of ||grad E_i(w1) - grad E_i(w2)|| /
// ||w1 - w2||, probes uniform in a ball of the given radius. A lower bound
// on the true constant; probes >= 100.
double estimate_lipschitz(const ModelSpec& model, const std::vector<DataShard>& shards,
                          int probes, double radius, RngStream& rng);

// --- run records ----------------------------------------------------------

struct CycleMetrics {
    int64_t cycle = 0;                  // completed-cycle count (1-based)
    double consensus_error_sq = 0.0;
    double kl = std::numeric_limits<double>::quiet_NaN();  // NaN when absent
    // cross-chain standard error of kl (in memory only, not in the CSV)
    double kl_se = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> accuracy;       // per agent, empty when absent
};

struct TrialStats {
    int64_t grad_evals = 0;
    int64_t noise_draws = 0;
    bool diverged = false;
    int64_t diverged_cycle = -1;
    int diverged_chain = -1;
};

struct RunRecord {
    int trial_index = 0;
    uint64_t trial_seed = 0;
    int n_agents = 0;
    int chains = 1;
    std::vector<CycleMetrics> series;
    TrialStats stats;
};

// CSV: cycle,consensus_error_sq[,kl][,acc_agent_0..n-1], one row per cadence
// point, doubles at full round-trip precision.
void write_trial_csv(const RunRecord& record, const std::string& path);

struct TrialCsv {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    // (cycle, value) pairs for a named column, NaN rows skipped.
    std::vector<std::pair<int64_t, double>> series(const std::string& column) const;
};

TrialCsv read_trial_csv(const std::string& path);

}  // namespace gula
