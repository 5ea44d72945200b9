#include "gula/scheduler.hpp"

#include "gula/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gula {

void HyperParams::validate() const {
    if (!(a > 0.0)) throw ValidationError("hyper.a", "must be > 0");
    if (!(delta_alpha > 0.0)) throw ValidationError("hyper.delta_alpha", "must be > 0");
    if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("hyper.beta", "must lie in (0, 1)");
    if (t_mode == TMode::fixed) {
        if (t_fixed < 1) throw ValidationError("hyper.T", "must be >= 1");
    } else {
        if (t_min < 1) throw ValidationError("hyper.T_min", "must be >= 1");
        if (t_max < t_min) throw ValidationError("hyper.T_max", "must be >= T_min");
    }
    if (!(minibatch_fraction > 0.0 && minibatch_fraction <= 1.0))
        throw ValidationError("hyper.f", "must lie in (0, 1]");
}

double step_size(int64_t tau_i, int64_t tau_j, const HyperParams& hp) {
    const double min_tau = static_cast<double>(std::min(tau_i, tau_j));
    return hp.a / std::pow(min_tau + 1.0, hp.delta_alpha);
}

int negotiate_t(const HyperParams& hp, int proposal_i, int proposal_j) {
    if (hp.t_mode == TMode::fixed) return hp.t_fixed;
    return std::max(1, (proposal_i + proposal_j) / 2);
}

std::pair<int, int> next_pair(const Graph& g, RngStream& rng, const std::vector<bool>& engaged) {
    const int n = g.size();
    auto free_neighbor_count = [&](int v) {
        int count = 0;
        for (int u : g.neighbors(v))
            if (!engaged[u]) ++count;
        return count;
    };
    std::vector<int> wakeable;
    wakeable.reserve(n);
    for (int v = 0; v < n; ++v)
        if (!engaged[v] && free_neighbor_count(v) > 0) wakeable.push_back(v);
    if (wakeable.empty()) throw NoAvailablePair("all free agents have only engaged neighbors");

    const int i = wakeable[rng.uniform_below(wakeable.size())];
    std::vector<int> candidates;
    for (int u : g.neighbors(i))
        if (!engaged[u]) candidates.push_back(u);
    const int j = candidates[rng.uniform_below(candidates.size())];
    return {std::min(i, j), std::max(i, j)};
}

GossipScheduler::GossipScheduler(const Graph& g, const HyperParams& hp, uint64_t chain_seed)
    : graph_(g),
      hp_(hp),
      rng_(derive_seed(chain_seed, StreamTag::scheduler)),
      chain_seed_(chain_seed) {
    hp_.validate();
    clock_.tau.assign(g.size(), 0);
    engaged_until_.assign(g.size(), 0);
}

std::optional<CycleSchedule> GossipScheduler::next_cycle() {
    std::vector<bool> engaged(graph_.size(), false);
    if (hp_.overlap == OverlapMode::overlapping) {
        for (int v = 0; v < graph_.size(); ++v) engaged[v] = engaged_until_[v] > tick_;
        bool any = false;
        for (int v = 0; v < graph_.size() && !any; ++v)
            if (!engaged[v])
                for (int u : graph_.neighbors(v))
                    if (!engaged[u]) {
                        any = true;
                        break;
                    }
        if (!any) {
            ++tick_;  // idle tick: the waking agent finds nobody free
            return std::nullopt;
        }
    }

    CycleSchedule s;
    std::tie(s.i, s.j) = next_pair(graph_, rng_, engaged);
    s.cycle = clock_.universal_k;

    if (hp_.t_mode == TMode::dynamic) {
        // proposals drawn per agent per cycle, lower index first
        const int prop_i = hp_.t_min + static_cast<int>(rng_.uniform_below(
                               static_cast<uint64_t>(hp_.t_max - hp_.t_min + 1)));
        const int prop_j = hp_.t_min + static_cast<int>(rng_.uniform_below(
                               static_cast<uint64_t>(hp_.t_max - hp_.t_min + 1)));
        s.t_steps = negotiate_t(hp_, prop_i, prop_j);
    } else {
        s.t_steps = hp_.t_fixed;
    }

    s.alpha = step_size(clock_.tau[s.i], clock_.tau[s.j], hp_);
    s.batch_seed_i = derive_seed(chain_seed_, StreamTag::batch, static_cast<uint64_t>(s.cycle),
                                 static_cast<uint64_t>(s.i));
    s.batch_seed_j = derive_seed(chain_seed_, StreamTag::batch, static_cast<uint64_t>(s.cycle),
                                 static_cast<uint64_t>(s.j));
    s.noise_seed_i = derive_seed(chain_seed_, StreamTag::noise, static_cast<uint64_t>(s.cycle),
                                 static_cast<uint64_t>(s.i));
    s.noise_seed_j = derive_seed(chain_seed_, StreamTag::noise, static_cast<uint64_t>(s.cycle),
                                 static_cast<uint64_t>(s.j));

    clock_.tau[s.i] += 1;
    clock_.tau[s.j] += 1;
    clock_.universal_k += 1;
    if (hp_.overlap == OverlapMode::overlapping) {
        engaged_until_[s.i] = tick_ + s.t_steps;
        engaged_until_[s.j] = tick_ + s.t_steps;
    }
    ++tick_;
    return s;
}

std::pair<double, double> lambda_bar_min(double lambda, double a, int n, double lipschitz,
                                         int t_upper, double p_m) {
    const double slack = 1.0 - a * n * lipschitz * t_upper / p_m;
    if (!(slack > 0.0))
        return {std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::quiet_NaN()};
    const double numer = 5.0 * a * a * n * n * lipschitz * lipschitz *
                         static_cast<double>(t_upper) * t_upper / (p_m * p_m * slack * slack);
    double best = std::numeric_limits<double>::infinity();
    double best_theta = std::numeric_limits<double>::quiet_NaN();
    constexpr int kGridPoints = 100;
    for (int g = 0; g < kGridPoints; ++g) {
        // log grid over [1e-2, 1e3]
        const double theta = std::pow(10.0, -2.0 + 5.0 * g / (kGridPoints - 1));
        const double value = lambda * (theta + 1.0) * (theta + 1.0) * (1.0 + numer / theta);
        if (value < best) {
            best = value;
            best_theta = theta;
        }
    }
    return {best, best_theta};
}

namespace {

// cond1 and cond2 at a given a (cond2 via the grid-minimized lambda_bar)
bool conds12_hold(double a, int n, double lipschitz, int t_upper, double p_m, double lambda) {
    if (!(a * t_upper < p_m / (n * lipschitz))) return false;
    return lambda_bar_min(lambda, a, n, lipschitz, t_upper, p_m).first < 1.0;
}

}  // namespace

ConditionReport check_conditions(const HyperParams& hp, const SpectralConstants& sc,
                                 double lipschitz, int n, std::optional<double> rho_u) {
    ConditionReport r;
    r.a = hp.a;
    r.t_upper = hp.t_upper();
    r.n = n;
    r.lipschitz = lipschitz;
    r.lipschitz_bar = n * lipschitz;  // subadditive bound for the summed gradient
    r.p_m = sc.p_m;
    r.lambda = sc.lambda_contraction;

    r.cond1_lhs = hp.a * r.t_upper;
    r.cond1_rhs = sc.p_m / (n * lipschitz);
    r.cond1 = r.cond1_lhs < r.cond1_rhs;

    std::tie(r.lambda_bar, r.theta_star) =
        lambda_bar_min(sc.lambda_contraction, hp.a, n, lipschitz, r.t_upper, sc.p_m);
    r.cond2 = r.lambda_bar < 1.0;

    r.cond3_evaluable = rho_u.has_value() && hp.delta_alpha > 1.0 / 3.0;
    if (r.cond3_evaluable) {
        r.rho_u = *rho_u;
        const double lbar4 = std::pow(r.lipschitz_bar, 4);
        r.cond3_rhs = std::cbrt(*rho_u * (3.0 * hp.delta_alpha - 1.0) /
                                (16.0 * r.t_upper * lbar4 * (6.0 * hp.delta_alpha - 1.0)));
        r.cond3 = hp.a < r.cond3_rhs;
    }

    // feasibility scan over a: log grid, 1e-12 .. 1
    r.max_feasible_a = 0.0;
    constexpr int kAGrid = 97;
    for (int g = kAGrid - 1; g >= 0; --g) {
        const double a = std::pow(10.0, -12.0 + 12.0 * g / (kAGrid - 1));
        bool ok = conds12_hold(a, n, lipschitz, r.t_upper, sc.p_m, sc.lambda_contraction);
        if (ok && r.cond3_evaluable) ok = a < r.cond3_rhs;
        if (ok) {
            r.max_feasible_a = a;
            break;
        }
    }
    return r;
}

}  // namespace gula
