#include "gula/engine.hpp"

#include "gula/errors.hpp"

#include <cmath>
#include <limits>
#include <thread>

namespace gula {

void fusion_step(SwarmState& state, int i, int j, double beta) {
    AgentState& ai = state.agents[i];
    AgentState& aj = state.agents[j];
    const Eigen::VectorXd wi = ai.w;
    const Eigen::VectorXd wj = aj.w;
    ai.w = wi - beta * (wi - wj);
    aj.w = wj - beta * (wj - wi);
}

Eigen::VectorXd local_computation(const Eigen::VectorXd& w_prev, const Eigen::VectorXd& grad,
                                  double alpha, double p_i, int n,
                                  const Eigen::VectorXd& noise) {
    const double drift = n * alpha / p_i;
    const double diffusion = std::sqrt(alpha * n * n);
    return w_prev - drift * grad + diffusion * noise;
}

void run_cycle(SwarmState& state, const CycleSchedule& schedule, const ModelSpec& model,
               const std::vector<DataShard>& shards, const HyperParams& hp,
               const GossipPairDistribution& dist, CycleCounters* counters) {
    fusion_step(state, schedule.i, schedule.j, hp.beta);

    const int n = state.size();
    const struct {
        int agent;
        uint64_t batch_seed, noise_seed;
    } actives[2] = {{schedule.i, schedule.batch_seed_i, schedule.noise_seed_i},
                    {schedule.j, schedule.batch_seed_j, schedule.noise_seed_j}};

    for (const auto& active : actives) {
        AgentState& agent = state.agents[active.agent];
        RngStream batch_rng(active.batch_seed);
        RngStream noise_rng(active.noise_seed);
        const double p_act = dist.activation_prob[active.agent];

        GradientResult first = energy_grad_stochastic(model, shards[active.agent], agent.w,
                                                      hp.minibatch_fraction, batch_rng);
        agent.w = local_computation(agent.w, first.grad, schedule.alpha, p_act, n,
                                    noise_rng.normal_vector(agent.w.size()));
        if (counters) {
            counters->grad_evals += 1;
            counters->noise_draws += 1;
        }
        if (!agent.w.allFinite())
            throw NonFiniteState("agent " + std::to_string(active.agent) + " diverged",
                                 schedule.cycle);

        for (int step = 1; step < schedule.t_steps; ++step) {
            const GradientResult g = grad_with_reused_batch(model, shards[active.agent], agent.w,
                                                            first.minibatch_indices);
            agent.w = local_computation(agent.w, g.grad, schedule.alpha, p_act, n,
                                        noise_rng.normal_vector(agent.w.size()));
            if (counters) {
                counters->grad_evals += 1;
                counters->noise_draws += 1;
            }
            if (!agent.w.allFinite())
                throw NonFiniteState("agent " + std::to_string(active.agent) + " diverged",
                                     schedule.cycle);
        }
        agent.tau += 1;
    }
    state.cycle_index += 1;
}

namespace {

// Streaming mean/variance across chains.
struct Welford {
    int64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double x) {
        ++count;
        const double d = x - mean;
        mean += d / static_cast<double>(count);
        m2 += d * (x - mean);
    }
    double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
};

// Everything one chain contributes to the trial, keyed by cadence slot.
struct ChainResult {
    std::vector<double> consensus;         // per slot
    std::vector<double> agent_scalar;      // slot * n + agent (toy KL only)
    std::vector<std::vector<double>> acc;  // per slot (accuracy only)
    CycleCounters counters;
    bool diverged = false;
    int64_t diverged_cycle = -1;
};

ChainResult compute_chain(const TrialContext& ctx, uint64_t chain_seed, int64_t slots,
                          bool toy_kl, bool track_accuracy) {
    const int n = ctx.graph->size();
    ChainResult result;
    result.consensus.assign(slots, 0.0);
    if (toy_kl) result.agent_scalar.assign(slots * n, 0.0);
    if (track_accuracy) result.acc.assign(slots, {});

    GossipScheduler scheduler(*ctx.graph, ctx.hp, chain_seed);
    SwarmState state;
    state.agents.resize(n);
    for (int agent = 0; agent < n; ++agent) {
        RngStream init_rng(derive_seed(chain_seed, StreamTag::init,
                                       static_cast<uint64_t>(agent)));
        state.agents[agent].w = init_params(ctx.model, init_rng);
    }

    int64_t completed = 0;
    try {
        while (completed < ctx.cycles) {
            const std::optional<CycleSchedule> schedule = scheduler.next_cycle();
            if (!schedule) continue;  // overlapping mode: idle tick
            run_cycle(state, *schedule, ctx.model, ctx.shards, ctx.hp, ctx.dist,
                      &result.counters);
            ++completed;
            if (completed % ctx.cadence != 0) continue;
            const int64_t slot = completed / ctx.cadence - 1;
            result.consensus[slot] = consensus_error_sq(state);
            if (toy_kl)
                for (int agent = 0; agent < n; ++agent)
                    result.agent_scalar[slot * n + agent] = state.agents[agent].w[0];
            if (track_accuracy) {
                std::vector<std::vector<Eigen::VectorXd>> samples(n);
                for (int agent = 0; agent < n; ++agent)
                    samples[agent].push_back(state.agents[agent].w);
                result.acc[slot] =
                    accuracy(ctx.model, samples, *ctx.test_inputs, *ctx.test_labels);
            }
        }
    } catch (const NonFiniteState& e) {
        result.diverged = true;
        result.diverged_cycle = e.cycle;
    } catch (const NonFiniteGradient&) {
        result.diverged = true;
        result.diverged_cycle = completed;
    }
    return result;
}

}  // namespace

RunRecord run_trial(const TrialContext& ctx, int trial_index) {
    const int n = ctx.graph->size();
    const int64_t slots = ctx.cycles / ctx.cadence;

    RunRecord record;
    record.trial_index = trial_index;
    record.trial_seed = derive_seed(ctx.master_seed, StreamTag::trial,
                                    static_cast<uint64_t>(trial_index));
    record.n_agents = n;
    record.chains = ctx.chains;

    const bool toy_kl = ctx.analytic_posterior.has_value() &&
                        ctx.model.kind == ModelKind::gaussian1d && ctx.chains >= 2;
    const bool track_accuracy =
        ctx.test_inputs != nullptr && ctx.test_labels != nullptr && ctx.chains == 1 &&
        ctx.model.kind != ModelKind::gaussian1d;

    std::vector<double> consensus_sum(slots, 0.0);
    // Cross-chain moments of each agent's scalar sample, per cadence slot.
    std::vector<std::vector<Welford>> chain_moments;
    if (toy_kl) chain_moments.assign(slots, std::vector<Welford>(n));
    std::vector<std::vector<double>> acc_rows;
    if (track_accuracy) acc_rows.assign(slots, {});

    // Chains are computed block-parallel but always reduced in chain-index
    // order, so the aggregate is bitwise independent of the worker count.
    CycleCounters counters;
    const int workers = std::max(1, std::min(ctx.workers, ctx.chains));
    for (int block_start = 0; block_start < ctx.chains && !record.stats.diverged;
         block_start += workers) {
        const int block = std::min(workers, ctx.chains - block_start);
        std::vector<ChainResult> results(block);
        if (block == 1) {
            results[0] = compute_chain(ctx,
                                       derive_seed(record.trial_seed, StreamTag::chain,
                                                   static_cast<uint64_t>(block_start)),
                                       slots, toy_kl, track_accuracy);
        } else {
            std::vector<std::thread> pool;
            std::vector<std::exception_ptr> errors(block);
            pool.reserve(block);
            for (int b = 0; b < block; ++b)
                pool.emplace_back([&, b] {
                    try {
                        results[b] = compute_chain(
                            ctx,
                            derive_seed(record.trial_seed, StreamTag::chain,
                                        static_cast<uint64_t>(block_start + b)),
                            slots, toy_kl, track_accuracy);
                    } catch (...) {
                        errors[b] = std::current_exception();
                    }
                });
            for (auto& worker : pool) worker.join();
            for (const auto& error : errors)
                if (error) std::rethrow_exception(error);
        }
        for (int b = 0; b < block; ++b) {
            const ChainResult& chain = results[b];
            counters.grad_evals += chain.counters.grad_evals;
            counters.noise_draws += chain.counters.noise_draws;
            if (chain.diverged) {
                record.stats.diverged = true;
                record.stats.diverged_cycle = chain.diverged_cycle;
                record.stats.diverged_chain = block_start + b;
                record.series.clear();
                break;
            }
            for (int64_t slot = 0; slot < slots; ++slot) {
                consensus_sum[slot] += chain.consensus[slot];
                if (toy_kl)
                    for (int agent = 0; agent < n; ++agent)
                        chain_moments[slot][agent].push(chain.agent_scalar[slot * n + agent]);
                if (track_accuracy) acc_rows[slot] = chain.acc[slot];
            }
        }
    }
    record.stats.grad_evals = counters.grad_evals;
    record.stats.noise_draws = counters.noise_draws;
    if (record.stats.diverged) return record;

    record.series.reserve(slots);
    for (int64_t slot = 0; slot < slots; ++slot) {
        CycleMetrics row;
        row.cycle = (slot + 1) * ctx.cadence;
        row.consensus_error_sq = consensus_sum[slot] / static_cast<double>(ctx.chains);
        if (toy_kl) {
            const auto [mu_p, var_p] = *ctx.analytic_posterior;
            double kl_acc = 0.0;
            double se_sq = 0.0;
            for (int agent = 0; agent < n; ++agent) {
                const Welford& m = chain_moments[slot][agent];
                kl_acc += kl_gaussian_from_moments(m.mean, m.variance(), mu_p, var_p);
                const double se =
                    kl_standard_error(m.mean, m.variance(), mu_p, var_p, m.count);
                se_sq += se * se;
            }
            row.kl = kl_acc / static_cast<double>(n);
            row.kl_se = std::sqrt(se_sq) / static_cast<double>(n);
        }
        if (track_accuracy) row.accuracy = acc_rows[slot];
        record.series.push_back(std::move(row));
    }
    return record;
}

}  // namespace gula
