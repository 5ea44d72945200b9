// engine.hpp — executes gossip cycles: pairwise fusion followed by T local
// Langevin computations with a reused minibatch, plus whole-trial execution.
#pragma once

#include "gula/graph.hpp"
#include "gula/metrics.hpp"
#include "gula/models.hpp"
#include "gula/scheduler.hpp"
#include "gula/state.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace gula {

// w_i <- w_i - beta (w_i - w_j), w_j <- w_j - beta (w_j - w_i), simultaneous.
// Preserves the pair sum exactly; nobody else is touched.
void fusion_step(SwarmState& state, int i, int j, double beta);

// One Langevin step: w - (n alpha / p_i) grad + sqrt(alpha n^2) noise,
// noise ~ N(0, I) supplied by the caller's stream.
Eigen::VectorXd local_computation(const Eigen::VectorXd& w_prev, const Eigen::VectorXd& grad,
                                  double alpha, double p_i, int n,
                                  const Eigen::VectorXd& noise);

struct CycleCounters {
    int64_t grad_evals = 0;
    int64_t noise_draws = 0;
};

// One full cycle: fusion, then per active agent (ascending index) a fresh
// minibatch draw followed by t_steps computations reusing it. Inactive agents
// are untouched. Throws NonFiniteState with the cycle index on divergence.
void run_cycle(SwarmState& state, const CycleSchedule& schedule, const ModelSpec& model,
               const std::vector<DataShard>& shards, const HyperParams& hp,
               const GossipPairDistribution& dist, CycleCounters* counters = nullptr);

// Inputs shared by every chain of a trial. Graph/test data are borrowed and
// must outlive the trial.
struct TrialContext {
    const Graph* graph = nullptr;
    GossipPairDistribution dist;
    ModelSpec model;
    std::vector<DataShard> shards;
    HyperParams hp;
    int64_t cycles = 1;
    int chains = 1;
    int64_t cadence = 1;  // record metrics every `cadence` completed cycles
    // Toy problem: exact posterior (mu_p, sigma_p^2); enables the cross-chain
    // KL series (needs chains >= 2).
    std::optional<std::pair<double, double>> analytic_posterior;
    // Classification: per-agent accuracy series (chains == 1).
    const Eigen::MatrixXd* test_inputs = nullptr;
    const std::vector<int>* test_labels = nullptr;
    uint64_t master_seed = 0;
    // Chains are computed in parallel by this many workers; the cross-chain
    // reduction always runs in chain-index order, so results are bitwise
    // independent of the worker count.
    int workers = 1;
};

// Runs `chains` independent replicas of the n-agent system and aggregates
// metrics across them. Bit-reproducible given (context, trial_index).
RunRecord run_trial(const TrialContext& ctx, int trial_index);

}  // namespace gula
