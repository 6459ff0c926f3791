#include "beammap/diff/sampler.hpp"

#include <cmath>
#include <stdexcept>

namespace beammap::diff {

namespace {
void check_bounded(const nn::Tensor& g, std::size_t t) {
    for (double v : g.data()) {
        if (!std::isfinite(v) || std::abs(v) > 1e6) {
            throw std::runtime_error("generate: reverse chain diverged at step " +
                                     std::to_string(t));
        }
    }
}
}  // namespace

nn::Tensor generate(const Denoiser& dn, const nn::ParamStore& ps, const DiffusionSchedule& sched,
                    const nn::Tensor& cond, std::uint64_t seed, std::uint64_t stream_offset) {
    if (cond.ndim() != 2 || cond.cols() != dn.config().cond_dim) {
        throw std::invalid_argument("generate: cond shape " + cond.shape_str() + ", expected (n, " +
                                    std::to_string(dn.config().cond_dim) + ")");
    }
    const std::size_t n = cond.rows(), gd = dn.config().g_dim;
    const std::size_t T = sched.steps();

    std::vector<nn::Rng> streams;
    streams.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        streams.push_back(nn::Rng::stream(seed, stream_offset + i));
    }

    nn::Tensor g_t({n, gd});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < gd; ++j) g_t[i * gd + j] = streams[i].normal();
    }

    for (std::size_t t = T; t >= 1; --t) {
        nn::Graph g;
        nn::Var vg = g.constant(g_t);
        nn::Var vc = g.constant(cond);
        nn::Var eps = dn.forward(g, ps, vg, vc, std::vector<std::size_t>(n, t), sched);
        nn::Tensor mu = posterior_mean(g_t, t, g.value(eps), sched);
        if (t > 1) {
            const double sigma = reverse_sigma(t, sched);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < gd; ++j) {
                    mu[i * gd + j] += sigma * streams[i].normal();
                }
            }
        }
        g_t = std::move(mu);
        check_bounded(g_t, t);
    }
    return g_t;
}

nn::Tensor reverse_step(const Denoiser& dn, const nn::ParamStore& ps,
                        const DiffusionSchedule& sched, const nn::Tensor& g_t, std::size_t t,
                        const nn::Tensor& cond_row, nn::Rng& rng) {
    if (g_t.ndim() != 2 || g_t.rows() != 1 || cond_row.ndim() != 2 || cond_row.rows() != 1) {
        throw std::invalid_argument("reverse_step: expects single-row g_t and cond");
    }
    nn::Graph g;
    nn::Var vg = g.constant(g_t);
    nn::Var vc = g.constant(cond_row);
    nn::Var eps = dn.forward(g, ps, vg, vc, {t}, sched);
    nn::Tensor mu = posterior_mean(g_t, t, g.value(eps), sched);
    if (t > 1) {
        const double sigma = reverse_sigma(t, sched);
        for (std::size_t j = 0; j < mu.numel(); ++j) mu[j] += sigma * rng.normal();
    }
    return mu;
}

}  // namespace beammap::diff
