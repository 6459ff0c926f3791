#include "beammap/diff/denoiser.hpp"

#include <cmath>
#include <stdexcept>

namespace beammap::diff {

nn::Tensor time_embedding(const std::vector<std::size_t>& t, std::size_t dim) {
    if (dim == 0 || dim % 2 != 0) {
        throw std::invalid_argument("time_embedding: dim must be positive and even");
    }
    const std::size_t half = dim / 2;
    nn::Tensor out({t.size(), dim});
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (std::size_t j = 0; j < half; ++j) {
            const double freq =
                std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(half));
            const double x = static_cast<double>(t[i]) * freq;
            out[i * dim + 2 * j] = std::sin(x);
            out[i * dim + 2 * j + 1] = std::cos(x);
        }
    }
    return out;
}

Denoiser::Denoiser(DenoiserConfig cfg) : cfg_(cfg) {
    if (cfg_.g_dim == 0 || cfg_.cond_dim == 0) {
        throw std::invalid_argument("Denoiser: g_dim and cond_dim must be positive");
    }
    if (cfg_.hidden_layers == 0) throw std::invalid_argument("Denoiser: need at least one hidden layer");
    std::size_t in = cfg_.g_dim + cfg_.cond_dim + cfg_.time_dim;
    for (std::size_t i = 0; i < cfg_.hidden_layers; ++i) {
        layers_.push_back(nn::Linear{"dn.h" + std::to_string(i), in, cfg_.width});
        in = cfg_.width;
    }
    layers_.push_back(nn::Linear{"dn.out", in, cfg_.g_dim});
}

void Denoiser::init_params(nn::ParamStore& ps, nn::Rng& rng) const {
    for (const auto& l : layers_) l.init(ps, rng);
}

nn::Var Denoiser::forward(nn::Graph& g, const nn::ParamStore& ps, nn::Var g_t, nn::Var cond,
                          const std::vector<std::size_t>& t,
                          const DiffusionSchedule& sched) const {
    const nn::Tensor& gv = g.value(g_t);
    const nn::Tensor& cv = g.value(cond);
    if (gv.ndim() != 2 || gv.cols() != cfg_.g_dim) {
        throw std::invalid_argument("Denoiser::forward: g_t shape " + gv.shape_str() +
                                    ", expected (n, " + std::to_string(cfg_.g_dim) + ")");
    }
    if (cv.ndim() != 2 || cv.cols() != cfg_.cond_dim || cv.rows() != gv.rows()) {
        throw std::invalid_argument("Denoiser::forward: cond shape " + cv.shape_str() +
                                    " does not match g_t " + gv.shape_str());
    }
    if (t.size() != gv.rows()) {
        throw std::invalid_argument("Denoiser::forward: one step index per row required");
    }
    for (std::size_t ti : t) {
        if (ti < 1 || ti > sched.steps()) {
            throw std::invalid_argument("Denoiser::forward: step " + std::to_string(ti) +
                                        " outside schedule");
        }
    }
    nn::Var emb = g.constant(time_embedding(t, cfg_.time_dim));
    nn::Var x = g.concat_cols({g_t, cond, emb});
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
        x = g.relu(layers_[i](g, ps, x));
    }
    return layers_.back()(g, ps, x);
}

}  // namespace beammap::diff
