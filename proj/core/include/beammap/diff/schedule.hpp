#pragma once

#include <cstddef>
#include <vector>

#include "beammap/nn/tensor.hpp"

namespace beammap::diff {

// Noise schedule for a T-step denoising diffusion process. Step t is 1-based;
// arrays are indexed t-1. eta rises linearly from eta_min to eta_max,
// alpha_t = 1 - eta_t, alpha_bar_t = prod_{s<=t} alpha_s.
struct DiffusionSchedule {
    std::vector<double> eta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;

    std::size_t steps() const { return eta.size(); }
};

DiffusionSchedule make_schedule(std::size_t T, double eta_min, double eta_max);

// g_t = sqrt(alpha_bar_t) * g0 + sqrt(1 - alpha_bar_t) * noise, elementwise.
nn::Tensor forward_sample(const nn::Tensor& g0, std::size_t t, const nn::Tensor& noise,
                          const DiffusionSchedule& sched);

// Mean of the reverse transition given the predicted noise:
//   (g_t - eta_t / sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(alpha_t)
nn::Tensor posterior_mean(const nn::Tensor& g_t, std::size_t t, const nn::Tensor& eps_hat,
                          const DiffusionSchedule& sched);

// Std dev of the reverse transition noise; zero at t == 1 so the final
// denoising step is deterministic.
double reverse_sigma(std::size_t t, const DiffusionSchedule& sched);

}  // namespace beammap::diff
