#include "gula/engine.hpp"

#include <benchmark/benchmark.h>

using namespace gula;

namespace {

struct ToyFixture {
    Graph graph = Graph::ring(5);
    GossipPairDistribution dist = activation_probabilities(graph);
    ModelSpec model = ModelSpec::gaussian1d(5, 1.0, 5.0);
    std::vector<DataShard> shards;
    HyperParams hp;

    ToyFixture() {
        RngStream rng(1);
        for (int a = 0; a < 5; ++a) {
            DataShard s;
            s.owner = a;
            s.inputs.resize(10, 1);
            for (int r = 0; r < 10; ++r) s.inputs(r, 0) = 5.0 * rng.normal();
            shards.push_back(std::move(s));
        }
        hp.a = 1e-4;
        hp.delta_alpha = 0.01;
        hp.beta = 0.5;
        hp.minibatch_fraction = 0.1;
    }
};

void BM_toy_cycle(benchmark::State& state) {
    ToyFixture fix;
    fix.hp.t_fixed = static_cast<int>(state.range(0));
    GossipScheduler scheduler(fix.graph, fix.hp, 99);
    SwarmState swarm;
    RngStream init(2);
    for (int a = 0; a < 5; ++a) swarm.agents.push_back({init.normal_vector(1), 0});
    for (auto _ : state) {
        const auto schedule = scheduler.next_cycle();
        run_cycle(swarm, *schedule, fix.model, fix.shards, fix.hp, fix.dist, nullptr);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_toy_cycle)->Arg(1)->Arg(5);

void BM_spectral_constants(benchmark::State& state) {
    const Graph g = Graph::ring(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(spectral_constants(g, 0.5));
}
BENCHMARK(BM_spectral_constants)->Arg(8)->Arg(32)->Arg(128);

void BM_consensus_error(benchmark::State& state) {
    RngStream rng(3);
    SwarmState swarm;
    for (int a = 0; a < 6; ++a) swarm.agents.push_back({rng.normal_vector(288), 0});
    for (auto _ : state) benchmark::DoNotOptimize(consensus_error_sq(swarm));
}
BENCHMARK(BM_consensus_error);

}  // namespace
