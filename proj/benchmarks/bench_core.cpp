#include <benchmark/benchmark.h>

#include "beammap/cli/config.hpp"
#include "beammap/diff/sampler.hpp"
#include "beammap/enc/encoder.hpp"
#include "beammap/rm/assign.hpp"
#include "beammap/rm/grid.hpp"
#include "beammap/sim/channel.hpp"

using namespace beammap;

namespace {

nn::Tensor random_tensor(std::vector<std::size_t> shape, nn::Rng& rng, double lo = -1.0,
                         double hi = 1.0) {
    nn::Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = lo + (hi - lo) * rng.uniform();
    return t;
}

void bm_graph_matmul_backward(benchmark::State& state) {
    nn::Rng rng(1);
    const nn::Tensor a = random_tensor({64, 32}, rng);
    const nn::Tensor b = random_tensor({32, 48}, rng);
    for (auto _ : state) {
        nn::Graph g;
        nn::Var va = g.leaf(a), vb = g.leaf(b);
        nn::Var y = g.sum(g.tanh_(g.matmul(va, vb)));
        g.backward(y);
        benchmark::DoNotOptimize(g.grad(va)[0]);
    }
}
BENCHMARK(bm_graph_matmul_backward);

void bm_beam_gain(benchmark::State& state) {
    const cli::ExperimentConfig cfg;
    const sim::Codebook cb = sim::dft_codebook(cfg.array);
    const sim::PathSet ps =
        sim::synth_paths(cfg.env.bs_positions[0], {40.0, 30.0}, cfg.env.walls);
    std::size_t j = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sim::beam_gain(ps, cb.beams[j], cfg.array));
        j = (j + 1) % cb.size();
    }
}
BENCHMARK(bm_beam_gain);

void bm_soft_assign(benchmark::State& state) {
    const cli::ExperimentConfig cfg;
    const rm::GridMap grid = cli::make_grid(cfg);
    nn::Rng rng(2);
    const nn::Tensor phat = random_tensor({200, 2}, rng, 0.0, 100.0);
    const nn::Tensor centers = grid.centers();
    for (auto _ : state) {
        nn::Graph g;
        nn::Var soft = rm::soft_assign(g, g.leaf(phat), g.constant(centers), 1.0);
        benchmark::DoNotOptimize(g.value(soft)[0]);
    }
}
BENCHMARK(bm_soft_assign);

void bm_denoiser_forward(benchmark::State& state) {
    const cli::ExperimentConfig cfg;
    const diff::Denoiser dn(cli::denoiser_config(cfg));
    const diff::DiffusionSchedule sched =
        diff::make_schedule(cfg.model.diffusion_steps, cfg.model.eta_min, cfg.model.eta_max);
    nn::ParamStore ps;
    nn::Rng rng(3);
    dn.init_params(ps, rng);
    const nn::Tensor g_t = random_tensor({400, dn.config().g_dim}, rng);
    const nn::Tensor cond = random_tensor({400, dn.config().cond_dim}, rng);
    const std::vector<std::size_t> t(400, 25);
    for (auto _ : state) {
        nn::Graph g;
        nn::Var out = dn.forward(g, ps, g.constant(g_t), g.constant(cond), t, sched);
        benchmark::DoNotOptimize(g.value(out)[0]);
    }
}
BENCHMARK(bm_denoiser_forward);

void bm_reverse_chain_row(benchmark::State& state) {
    const cli::ExperimentConfig cfg;
    const diff::Denoiser dn(cli::denoiser_config(cfg));
    const diff::DiffusionSchedule sched =
        diff::make_schedule(cfg.model.diffusion_steps, cfg.model.eta_min, cfg.model.eta_max);
    nn::ParamStore ps;
    nn::Rng rng(4);
    dn.init_params(ps, rng);
    const nn::Tensor cond = random_tensor({1, dn.config().cond_dim}, rng);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(diff::generate(dn, ps, sched, cond, seed++)[0]);
    }
}
BENCHMARK(bm_reverse_chain_row);

void bm_encoder_forward(benchmark::State& state) {
    const cli::ExperimentConfig cfg;
    const enc::Encoder encoder(cli::encoder_config(cfg));
    nn::ParamStore ps;
    nn::Rng rng(5);
    encoder.init_params(ps, rng);
    const std::size_t L = 200, B = cli::n_beams(cfg);
    const nn::Tensor values = random_tensor({L, B}, rng, 0.0, 2.0);
    nn::Tensor mask({L, B});
    for (std::size_t i = 0; i < mask.numel(); ++i) mask[i] = rng.uniform() < 0.25 ? 1.0 : 0.0;
    for (auto _ : state) {
        nn::Graph g;
        const auto out = encoder.forward(g, ps, values, mask);
        benchmark::DoNotOptimize(g.value(out.phat)[0]);
    }
}
BENCHMARK(bm_encoder_forward);

}  // namespace

BENCHMARK_MAIN();
