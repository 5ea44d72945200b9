// scheduler.hpp — gossip event sequence: who is active when, the per-cycle
// step size and local-computation count, and the convergence-condition
// checker.
#pragma once

#include "gula/graph.hpp"
#include "gula/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace gula {

enum class TMode { fixed, dynamic };  // config strings "static" / "dynamic"
enum class OverlapMode { sequential, overlapping };

struct HyperParams {
    double a = 1e-4;           // initial step scale
    double delta_alpha = 0.5;  // step decay exponent
    double beta = 0.5;         // fusion coefficient
    TMode t_mode = TMode::fixed;
    int t_fixed = 1;
    int t_min = 1;
    int t_max = 10;
    double minibatch_fraction = 1.0;  // f
    OverlapMode overlap = OverlapMode::sequential;

    // Throws ValidationError naming the offending field.
    void validate() const;
    // T bound used by the condition checker: the static T, or the dynamic cap.
    int t_upper() const { return t_mode == TMode::fixed ? t_fixed : t_max; }
};

// Per-agent activation counts tau_i plus the universal cycle counter.
// In sequential mode sum(tau) == 2 * universal_k.
struct ClockState {
    std::vector<int64_t> tau;
    int64_t universal_k = 0;
};

// Everything the two active agents agree on at the start of a cycle.
struct CycleSchedule {
    int64_t cycle = 0;  // universal clock tick this cycle was issued at
    int i = 0, j = 0;   // active pair, i < j
    int t_steps = 1;    // negotiated T, shared by the pair
    double alpha = 0.0; // shared step size
    // Disjoint sub-streams for the pair's minibatch draw and noise.
    uint64_t batch_seed_i = 0, batch_seed_j = 0;
    uint64_t noise_seed_i = 0, noise_seed_j = 0;
};

// alpha = a / (min(tau_i, tau_j) + 1)^delta_alpha
double step_size(int64_t tau_i, int64_t tau_j, const HyperParams& hp);

// Static mode returns the configured T; dynamic mode floor-averages the two
// proposals, clamped to >= 1.
int negotiate_t(const HyperParams& hp, int proposal_i, int proposal_j);

// Draws the active pair: waking agent uniform over non-engaged agents with at
// least one free neighbor, partner uniform over the free neighbors (an
// engaged neighbor only forces re-drawing the partner, never the waker).
// With nobody engaged this is the plain two-stage gossip law. Throws
// NoAvailablePair when every free agent is walled in by engaged neighbors.
std::pair<int, int> next_pair(const Graph& g, RngStream& rng, const std::vector<bool>& engaged);

// One logical event source per trial chain. All randomness is derived from
// chain_seed, so the schedule is reproducible independent of consumers.
class GossipScheduler {
public:
    GossipScheduler(const Graph& g, const HyperParams& hp, uint64_t chain_seed);

    // Sequential mode always yields a schedule. Overlapping mode returns
    // nullopt on an idle tick (no startable pair); the started pair stays
    // engaged for t_steps ticks.
    std::optional<CycleSchedule> next_cycle();

    const ClockState& clock() const { return clock_; }
    int64_t ticks() const { return tick_; }

private:
    const Graph& graph_;
    HyperParams hp_;
    ClockState clock_;
    RngStream rng_;
    uint64_t chain_seed_;
    int64_t tick_ = 0;                    // event-queue steps, >= universal_k
    std::vector<int64_t> engaged_until_;  // exclusive tick index
};

// Numeric report of the three sufficient conditions for consensus and
// convergence, evaluated at the configured hyperparameters. Never throws:
// experiments are free to run outside the guaranteed regime.
struct ConditionReport {
    double a = 0.0;
    int t_upper = 1;
    int n = 0;
    double lipschitz = 0.0;       // L = max_i L_i (estimate)
    double lipschitz_bar = 0.0;   // Lipschitz bound for the summed gradient (n * L)
    double p_m = 0.0;
    double lambda = 0.0;          // contraction eigenvalue from SpectralConstants

    double cond1_lhs = 0.0;       // a * T
    double cond1_rhs = 0.0;       // p_m / (n L)
    bool cond1 = false;

    double lambda_bar = 0.0;      // min over the theta grid
    double theta_star = 0.0;      // grid argmin
    bool cond2 = false;

    bool cond3_evaluable = false; // requires rho_u and delta_alpha > 1/3
    double rho_u = 0.0;
    double cond3_rhs = 0.0;       // admissible-a bound when evaluable
    bool cond3 = false;

    // Largest a on a log grid (1e-12..1) satisfying cond1 and cond2 (and
    // cond3 when evaluable); 0 when none does.
    double max_feasible_a = 0.0;
};

// lambda_bar(theta) = lambda (theta+1)^2 [1 + 5 a^2 n^2 L^2 T^2 /
//   (theta p_m^2 (1 - a n L T / p_m)^2)], minimized over a 100-point log grid
// theta in [1e-2, 1e3]. Returns {min, argmin}; {inf, nan} when a T >= p_m/(nL).
std::pair<double, double> lambda_bar_min(double lambda, double a, int n, double lipschitz,
                                         int t_upper, double p_m);

ConditionReport check_conditions(const HyperParams& hp, const SpectralConstants& sc,
                                 double lipschitz, int n,
                                 std::optional<double> rho_u = std::nullopt);

}  // namespace gula
