#include "gula/scheduler.hpp"

#include "gula/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace gula;

namespace {

HyperParams toy_hp() {
    HyperParams hp;
    hp.a = 1e-4;
    hp.delta_alpha = 0.01;
    hp.beta = 0.5;
    hp.t_mode = TMode::fixed;
    hp.t_fixed = 1;
    hp.minibatch_fraction = 0.1;
    return hp;
}

}  // namespace

TEST_CASE("step size follows the local-clock schedule") {
    HyperParams hp = toy_hp();
    CHECK(step_size(0, 0, hp) == doctest::Approx(1e-4).epsilon(1e-15));

    hp.delta_alpha = 0.5;
    CHECK(step_size(3, 7, hp) == doctest::Approx(5e-5).epsilon(1e-12));  // (3+1)^0.5 = 2
    CHECK(step_size(7, 3, hp) == step_size(3, 7, hp));
}

TEST_CASE("T negotiation: floor average in dynamic mode, passthrough in static") {
    HyperParams hp = toy_hp();
    hp.t_mode = TMode::dynamic;
    CHECK(negotiate_t(hp, 3, 6) == 4);
    CHECK(negotiate_t(hp, 6, 3) == 4);
    CHECK(negotiate_t(hp, 1, 1) == 1);

    hp.t_mode = TMode::fixed;
    hp.t_fixed = 5;
    CHECK(negotiate_t(hp, 2, 9) == 5);

    hp.t_mode = TMode::dynamic;
    RngStream rng(12);
    for (int trial = 0; trial < 500; ++trial) {
        const int a = 1 + static_cast<int>(rng.uniform_below(10));
        const int b = 1 + static_cast<int>(rng.uniform_below(10));
        const int t = negotiate_t(hp, a, b);
        CHECK(t >= 1);
        CHECK(t == negotiate_t(hp, b, a));
    }
}

TEST_CASE("next_pair: forced pairs and exhaustion") {
    RngStream rng(3);

    const Graph two = Graph::complete(2);
    for (int i = 0; i < 10; ++i)
        CHECK(next_pair(two, rng, std::vector<bool>(2, false)) == std::pair<int, int>{0, 1});

    // ring of 5 with agents 1 and 2 engaged: any pair containing 0 must be
    // {0,4}, and 1/2 never take part
    const Graph ring = Graph::ring(5);
    std::vector<bool> engaged(5, false);
    engaged[1] = engaged[2] = true;
    bool saw_zero = false;
    for (int i = 0; i < 200; ++i) {
        const auto [a, b] = next_pair(ring, rng, engaged);
        CHECK(a != 1);
        CHECK(a != 2);
        CHECK(b != 1);
        CHECK(b != 2);
        if (a == 0) {
            saw_zero = true;
            CHECK(b == 4);
        }
    }
    CHECK(saw_zero);

    // path 0-1-2-3 with the middle engaged: ends are walled in
    const Graph path = Graph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
    std::vector<bool> middle(4, false);
    middle[1] = middle[2] = true;
    CHECK_THROWS_AS(next_pair(path, rng, middle), NoAvailablePair);
}

TEST_CASE("sequential schedule: clocks, edges, empirical pair law") {
    const Graph g = Graph::ring(5);
    const auto dist = activation_probabilities(g);
    GossipScheduler scheduler(g, toy_hp(), 991);

    const int cycles = 1000000;
    std::map<std::pair<int, int>, int> counts;
    for (int k = 0; k < cycles; ++k) {
        const auto s = scheduler.next_cycle();
        REQUIRE(s.has_value());
        CHECK(g.has_edge(s->i, s->j));
        counts[{s->i, s->j}]++;
    }
    int64_t tau_sum = 0;
    for (int64_t t : scheduler.clock().tau) tau_sum += t;
    CHECK(tau_sum == 2 * static_cast<int64_t>(cycles));
    CHECK(scheduler.clock().universal_k == cycles);

    for (size_t e = 0; e < dist.pairs.size(); ++e) {
        const double p = dist.pair_prob[e];
        const double freq = counts[dist.pairs[e]] / static_cast<double>(cycles);
        const double sigma = std::sqrt(p * (1.0 - p) / cycles);
        CHECK(std::abs(freq - p) < 3.0 * sigma);
    }
}

TEST_CASE("step sizes are non-increasing in min(tau) and per pair") {
    HyperParams hp = toy_hp();
    hp.delta_alpha = 0.3;
    double prev = 1e18;
    for (int64_t tau = 0; tau < 1000; ++tau) {
        const double alpha = step_size(tau, tau + 5, hp);
        CHECK(alpha > 0.0);
        CHECK(alpha <= prev);
        prev = alpha;
    }

    // for a fixed pair both taus only grow, so the pair's alpha never rebounds
    const Graph g = Graph::ring(5);
    GossipScheduler scheduler(g, hp, 17);
    std::map<std::pair<int, int>, double> last_alpha;
    for (int k = 0; k < 20000; ++k) {
        const auto s = scheduler.next_cycle();
        const auto key = std::pair(s->i, s->j);
        const auto it = last_alpha.find(key);
        if (it != last_alpha.end()) CHECK(s->alpha <= it->second + 1e-18);
        last_alpha[key] = s->alpha;
    }
}

TEST_CASE("dynamic T stays within bounds and respects equal proposals") {
    const Graph g = Graph::ring(6);
    HyperParams hp = toy_hp();
    hp.t_mode = TMode::dynamic;
    hp.t_min = 1;
    hp.t_max = 10;
    GossipScheduler scheduler(g, hp, 55);
    for (int k = 0; k < 5000; ++k) {
        const auto s = scheduler.next_cycle();
        CHECK(s->t_steps >= 1);
        CHECK(s->t_steps <= 10);
    }

    hp.t_min = hp.t_max = 4;
    GossipScheduler fixed_draws(g, hp, 56);
    for (int k = 0; k < 100; ++k) CHECK(fixed_draws.next_cycle()->t_steps == 4);
}

TEST_CASE("overlapping mode engages pairs for T ticks") {
    const Graph g = Graph::ring(4);
    HyperParams hp = toy_hp();
    hp.overlap = OverlapMode::overlapping;
    hp.t_fixed = 6;
    GossipScheduler scheduler(g, hp, 7);

    // ring of 4: two disjoint edges always exist, so two cycles start
    // back-to-back and then every tick idles until the first pair frees up
    const auto first = scheduler.next_cycle();
    REQUIRE(first.has_value());
    const auto second = scheduler.next_cycle();
    REQUIRE(second.has_value());
    CHECK(first->i != second->i);
    CHECK(first->j != second->j);
    int idle = 0;
    for (int tick = 2; tick < 6; ++tick) {
        const auto s = scheduler.next_cycle();
        CHECK_FALSE(s.has_value());
        ++idle;
    }
    CHECK(idle == 4);
    const auto resumed = scheduler.next_cycle();  // tick 6: first pair is free again
    REQUIRE(resumed.has_value());
    CHECK(std::pair(resumed->i, resumed->j) == std::pair(first->i, first->j));
}

TEST_CASE("condition report on the toy setting") {
    const Graph g = Graph::ring(5);
    const SpectralConstants sc = spectral_constants(g, 0.5);
    HyperParams hp = toy_hp();
    hp.t_fixed = 5;
    const double lipschitz = 0.6;  // (1/n)/sigma_theta^2 + M_i/sigma_x^2 for the toy shards

    const ConditionReport r = check_conditions(hp, sc, lipschitz, 5);
    CHECK(r.cond1);
    CHECK(r.cond1_lhs == doctest::Approx(5e-4));
    CHECK(r.cond1_rhs == doctest::Approx(0.4 / 3.0).epsilon(1e-12));
    CHECK(r.cond2);
    CHECK(r.lambda_bar > 0.8);
    CHECK(r.lambda_bar < 1.0);
    CHECK_FALSE(r.cond3_evaluable);  // delta_alpha = 0.01 <= 1/3
    CHECK(r.max_feasible_a >= hp.a);

    // the reported lambda_bar is the grid minimum
    double brute = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100; ++i) {
        const double theta = std::pow(10.0, -2.0 + 5.0 * i / 99.0);
        const double slack = 1.0 - hp.a * 5 * lipschitz * 5 / sc.p_m;
        const double value =
            sc.lambda_contraction * (theta + 1.0) * (theta + 1.0) *
            (1.0 + 5.0 * hp.a * hp.a * 25.0 * lipschitz * lipschitz * 25.0 /
                       (theta * sc.p_m * sc.p_m * slack * slack));
        brute = std::min(brute, value);
    }
    CHECK(r.lambda_bar == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("condition boundary and limits") {
    const Graph g = Graph::ring(5);
    const SpectralConstants sc = spectral_constants(g, 0.5);
    const double lipschitz = 0.6;
    const int n = 5;

    // exact boundary a T = p_m / (n L) fails the strict inequality
    HyperParams hp = toy_hp();
    hp.t_fixed = 5;
    hp.a = sc.p_m / (n * lipschitz * hp.t_fixed);
    const ConditionReport boundary = check_conditions(hp, sc, lipschitz, n);
    CHECK_FALSE(boundary.cond1);

    // a small enough a satisfies everything that is evaluable
    hp.a = 1e-9;
    hp.delta_alpha = 0.5;  // > 1/3 so condition 3 becomes evaluable
    const ConditionReport tiny = check_conditions(hp, sc, lipschitz, n, 1.0);
    CHECK(tiny.cond1);
    CHECK(tiny.cond2);
    CHECK(tiny.cond3_evaluable);
    CHECK(tiny.cond3);
}

TEST_CASE("decreasing a never flips a condition from true to false") {
    const Graph g = Graph::ring(5);
    const SpectralConstants sc = spectral_constants(g, 0.5);
    HyperParams hp = toy_hp();
    hp.delta_alpha = 0.5;
    hp.t_fixed = 3;

    bool seen1 = false, seen2 = false, seen3 = false;
    for (double a = 1e-1; a > 1e-10; a /= 3.0) {
        hp.a = a;
        const ConditionReport r = check_conditions(hp, sc, 0.6, 5, 2.0);
        if (seen1) CHECK(r.cond1);
        if (seen2) CHECK(r.cond2);
        if (seen3) CHECK(r.cond3);
        seen1 = seen1 || r.cond1;
        seen2 = seen2 || r.cond2;
        seen3 = seen3 || r.cond3;
    }
    CHECK(seen1);
    CHECK(seen2);
    CHECK(seen3);
}

TEST_CASE("hyperparameter validation names the offending field") {
    HyperParams hp = toy_hp();
    hp.beta = 1.0;
    CHECK_THROWS_AS(hp.validate(), ValidationError);
    try {
        hp.validate();
    } catch (const ValidationError& e) {
        CHECK(e.field == "hyper.beta");
    }
    hp = toy_hp();
    hp.minibatch_fraction = 0.0;
    CHECK_THROWS_AS(hp.validate(), ValidationError);
}
