#pragma once

#include <vector>

#include "beammap/diff/schedule.hpp"
#include "beammap/nn/graph.hpp"
#include "beammap/nn/layers.hpp"

namespace beammap::diff {

// Sinusoidal embedding of 1-based step indices, one row per entry. dim must
// be even; pairs (sin, cos) over geometrically spaced frequencies.
nn::Tensor time_embedding(const std::vector<std::size_t>& t, std::size_t dim);

struct DenoiserConfig {
    std::size_t g_dim = 0;     // dimensionality of the diffused vector
    std::size_t cond_dim = 0;  // dimensionality of the conditioning latent
    std::size_t width = 128;
    std::size_t hidden_layers = 3;
    std::size_t time_dim = 16;
};

// Conditional noise predictor: an MLP over [g_t, condition, time embedding].
class Denoiser {
public:
    explicit Denoiser(DenoiserConfig cfg);

    void init_params(nn::ParamStore& ps, nn::Rng& rng) const;

    // g_t (n, g_dim), cond (n, cond_dim), t one 1-based step per row.
    nn::Var forward(nn::Graph& g, const nn::ParamStore& ps, nn::Var g_t, nn::Var cond,
                    const std::vector<std::size_t>& t, const DiffusionSchedule& sched) const;

    const DenoiserConfig& config() const { return cfg_; }

private:
    DenoiserConfig cfg_;
    std::vector<nn::Linear> layers_;
};

}  // namespace beammap::diff
