// Microbenchmarks for the hot paths: consensus iterations, topology
// generation, spectral radius, loss gradients, and a full training round.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <memory>

#include "hfl/consensus.hpp"
#include "hfl/data.hpp"
#include "hfl/model.hpp"
#include "hfl/network.hpp"
#include "hfl/protocol.hpp"
#include "hfl/rng.hpp"

namespace {

hfl::ClusterTopology bench_topology(int n) {
    hfl::Rng rng(42);
    auto topo = hfl::generate_rgg_topology(n, 250.0, 500.0, rng);
    hfl::finalize_topology(topo, 0.0);
    return topo;
}

void BM_ConsensusRounds(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const int rounds = static_cast<int>(state.range(1));
    auto topo = bench_topology(n);
    hfl::Rng rng(7);
    hfl::NodeStates z(n, 512);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < 512; ++c) z(i, c) = rng.normal();
    for (auto _ : state) {
        auto out = hfl::run_consensus(topo.weight, z, rounds);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rounds));
}
BENCHMARK(BM_ConsensusRounds)->Args({5, 10})->Args({20, 10})->Args({20, 100});

void BM_RggTopology(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        hfl::Rng rng(++seed);
        auto topo = hfl::generate_rgg_topology(n, 250.0, 500.0, rng);
        benchmark::DoNotOptimize(topo.edge_count);
    }
}
BENCHMARK(BM_RggTopology)->Arg(5)->Arg(20)->Arg(50);

void BM_SpectralRadius(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    auto topo = bench_topology(n);
    auto v = hfl::build_consensus_matrix(topo, hfl::default_edge_weight(topo));
    for (auto _ : state) {
        double r = hfl::spectral_radius_bound(v, n);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_SpectralRadius)->Arg(5)->Arg(20)->Arg(50);

struct RoundFixture {
    hfl::NetworkHierarchy h;
    hfl::Dataset ds;
    hfl::Partition part;
    std::unique_ptr<hfl::Model> model;
    hfl::SimSetup setup;

    RoundFixture() {
        hfl::HierarchySpec spec;
        spec.layers = {hfl::HierarchySpec::uniform_layer(1, 5),
                       hfl::HierarchySpec::uniform_layer(5, 5)};
        h = hfl::build_hierarchy(spec);
        hfl::Rng drng(3);
        ds = hfl::make_blobs(25 * 200, 20, 5, 0.5, 2.0, drng);
        hfl::Rng prng(4);
        part = hfl::partition(ds, 25, hfl::PartitionSpec{}, prng);
        hfl::LossSpec loss;
        model = std::make_unique<hfl::Model>(ds, part.assignment, loss);

        std::vector<hfl::ClusterTopology> topos;
        for (std::size_t c = 0; c < h.clusters.size(); ++c) {
            hfl::Rng trng(100 + c);
            auto t = hfl::generate_rgg_topology(
                static_cast<int>(h.clusters[c].members.size()), 250.0, 500.0, trng);
            hfl::finalize_topology(t, 0.0);
            topos.push_back(std::move(t));
        }
        std::vector<hfl::ClusterMode> modes(h.clusters.size(), hfl::ClusterMode::Lut);
        setup = hfl::SimSetup::create(h, *model, std::move(topos), std::move(modes));
    }
};

void BM_SvmGradient(benchmark::State& state) {
    RoundFixture fx;
    hfl::ParamVector w = hfl::ParamVector::Zero(fx.model->dim());
    for (auto _ : state) {
        auto g = fx.model->global_gradient(w);
        benchmark::DoNotOptimize(g.data());
    }
}
BENCHMARK(BM_SvmGradient);

void BM_FullRound(benchmark::State& state) {
    RoundFixture fx;
    hfl::PolicyConfig policy;
    policy.kind = hfl::PolicyConfig::Kind::Fixed;
    policy.fixed_theta = 10;
    hfl::ParamVector w = hfl::ParamVector::Zero(fx.model->dim());
    std::uint64_t seed = 0;
    for (auto _ : state) {
        hfl::RoundSpec spec;
        spec.k = 1;
        spec.beta_leaf = 1.0 / fx.setup.consts.eta;
        auto r = hfl::run_global_round(fx.setup, policy, w, ++seed, spec);
        benchmark::DoNotOptimize(r.loss);
    }
}
BENCHMARK(BM_FullRound);

}  // namespace

BENCHMARK_MAIN();
