#include "beammap/sim/array.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace beammap::sim {

std::vector<cplx> steering_vector(double aod, const ArrayConfig& cfg) {
    if (cfg.n_antennas == 0) throw std::invalid_argument("steering_vector: empty array");
    std::vector<cplx> a(cfg.n_antennas);
    const double phase_step = -2.0 * std::numbers::pi * cfg.element_spacing * std::sin(aod);
    for (std::size_t k = 0; k < cfg.n_antennas; ++k) {
        const double ph = phase_step * static_cast<double>(k);
        a[k] = cplx(std::cos(ph), std::sin(ph));
    }
    return a;
}

Codebook dft_codebook(const ArrayConfig& cfg) {
    if (cfg.n_antennas == 0) throw std::invalid_argument("dft_codebook: empty array");
    const std::size_t n = cfg.n_antennas;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    Codebook cb;
    cb.beams.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        cb.beams[j].resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double ph = 2.0 * std::numbers::pi * static_cast<double>(j * k) /
                              static_cast<double>(n);
            cb.beams[j][k] = cplx(std::cos(ph) * scale, std::sin(ph) * scale);
        }
    }
    return cb;
}

double beam_alignment_gain(const std::vector<cplx>& a, const std::vector<cplx>& w) {
    if (a.size() != w.size()) {
        throw std::invalid_argument("beam_alignment_gain: length mismatch " +
                                    std::to_string(a.size()) + " vs " + std::to_string(w.size()));
    }
    cplx acc(0.0, 0.0);
    for (std::size_t k = 0; k < a.size(); ++k) acc += std::conj(a[k]) * w[k];
    return std::norm(acc);
}

}  // namespace beammap::sim
