#include "gula/models.hpp"

#include <benchmark/benchmark.h>

using namespace gula;

namespace {

DataShard make_shard(const ModelSpec& model, int rows, uint64_t seed) {
    RngStream rng(seed);
    DataShard shard;
    shard.owner = 0;
    const int d = model.kind == ModelKind::gaussian1d ? 1 : model.d_in;
    shard.inputs.resize(rows, d);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < d; ++c) shard.inputs(r, c) = rng.normal();
    if (model.kind != ModelKind::gaussian1d) {
        shard.labels.resize(rows);
        const int classes = model.kind == ModelKind::logistic ? 2 : model.n_classes;
        for (int r = 0; r < rows; ++r)
            shard.labels[r] = static_cast<int>(rng.uniform_below(classes));
    }
    return shard;
}

void BM_logistic_full_grad(benchmark::State& state) {
    const ModelSpec model = ModelSpec::logistic(6, 11, {PriorKind::gaussian, 0.0, 20.0});
    const DataShard shard = make_shard(model, static_cast<int>(state.range(0)), 1);
    RngStream rng(2);
    const Eigen::VectorXd w = rng.normal_vector(model.d_w);
    for (auto _ : state) benchmark::DoNotOptimize(energy_grad_full(model, shard, w).grad);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_logistic_full_grad)->Arg(256)->Arg(2048);

void BM_softmax_full_grad(benchmark::State& state) {
    const ModelSpec model = ModelSpec::softmax(6, 24, 12, {PriorKind::gaussian, 0.0, 20.0});
    const DataShard shard = make_shard(model, static_cast<int>(state.range(0)), 3);
    RngStream rng(4);
    const Eigen::VectorXd w = rng.normal_vector(model.d_w);
    for (auto _ : state) benchmark::DoNotOptimize(energy_grad_full(model, shard, w).grad);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_softmax_full_grad)->Arg(256)->Arg(2048);

void BM_softmax_minibatch_grad(benchmark::State& state) {
    const ModelSpec model = ModelSpec::softmax(6, 24, 12, {PriorKind::gaussian, 0.0, 20.0});
    const DataShard shard = make_shard(model, 2000, 5);
    RngStream rng(6);
    const Eigen::VectorXd w = rng.normal_vector(model.d_w);
    for (auto _ : state)
        benchmark::DoNotOptimize(energy_grad_stochastic(model, shard, w, 0.005, rng).grad);
}
BENCHMARK(BM_softmax_minibatch_grad);

}  // namespace
