#include "beammap/diff/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace beammap::diff {

namespace {
void require_step(std::size_t t, const DiffusionSchedule& sched, const char* op) {
    if (t < 1 || t > sched.steps()) {
        throw std::invalid_argument(std::string(op) + ": step " + std::to_string(t) +
                                    " outside [1, " + std::to_string(sched.steps()) + "]");
    }
}
}  // namespace

DiffusionSchedule make_schedule(std::size_t T, double eta_min, double eta_max) {
    if (T == 0) throw std::invalid_argument("make_schedule: T must be positive");
    if (eta_min <= 0.0 || eta_max >= 1.0 || eta_min > eta_max) {
        throw std::invalid_argument("make_schedule: need 0 < eta_min <= eta_max < 1");
    }
    DiffusionSchedule s;
    s.eta.resize(T);
    s.alpha.resize(T);
    s.alpha_bar.resize(T);
    double prod = 1.0;
    for (std::size_t i = 0; i < T; ++i) {
        const double frac = (T == 1) ? 0.0 : static_cast<double>(i) / static_cast<double>(T - 1);
        s.eta[i] = eta_min + (eta_max - eta_min) * frac;
        s.alpha[i] = 1.0 - s.eta[i];
        prod *= s.alpha[i];
        s.alpha_bar[i] = prod;
    }
    return s;
}

nn::Tensor forward_sample(const nn::Tensor& g0, std::size_t t, const nn::Tensor& noise,
                          const DiffusionSchedule& sched) {
    require_step(t, sched, "forward_sample");
    nn::require_same_shape(g0, noise, "forward_sample");
    const double ab = sched.alpha_bar[t - 1];
    const double c0 = std::sqrt(ab), c1 = std::sqrt(1.0 - ab);
    nn::Tensor out(g0.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = c0 * g0[i] + c1 * noise[i];
    return out;
}

nn::Tensor posterior_mean(const nn::Tensor& g_t, std::size_t t, const nn::Tensor& eps_hat,
                          const DiffusionSchedule& sched) {
    require_step(t, sched, "posterior_mean");
    nn::require_same_shape(g_t, eps_hat, "posterior_mean");
    const double ab = sched.alpha_bar[t - 1];
    const double w = sched.eta[t - 1] / std::sqrt(1.0 - ab);
    const double inv_sqrt_a = 1.0 / std::sqrt(sched.alpha[t - 1]);
    nn::Tensor out(g_t.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = inv_sqrt_a * (g_t[i] - w * eps_hat[i]);
    return out;
}

double reverse_sigma(std::size_t t, const DiffusionSchedule& sched) {
    require_step(t, sched, "reverse_sigma");
    if (t == 1) return 0.0;
    const double ab_prev = sched.alpha_bar[t - 2];
    const double ab = sched.alpha_bar[t - 1];
    return std::sqrt((1.0 - ab_prev) / (1.0 - ab) * sched.eta[t - 1]);
}

}  // namespace beammap::diff
