#include "beammap/sim/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace beammap::sim {

PathSet synth_paths(Vec2 tx, Vec2 rx, const std::vector<Wall>& walls) {
    if (tx.x == rx.x && tx.y == rx.y) {
        throw std::invalid_argument("synth_paths: tx and rx coincide");
    }
    PathSet out;
    if (!segment_blocked(tx, rx, walls)) {
        const Vec2 d = rx - tx;
        out.paths.push_back({1.0 / norm(d), std::atan2(d.y, d.x)});
    }
    for (const Wall& w : walls) {
        const Vec2 mirror = mirror_point(tx, w);
        auto hit = segment_intersect(mirror, rx, w.a, w.b);
        // Strict interior crossing: grazing/endpoint geometry produces no
        // usable bounce.
        if (!hit || hit->t <= 1e-9 || hit->t >= 1.0 - 1e-9) continue;
        const Vec2 q = w.a + (w.b - w.a) * hit->u;
        if (segment_blocked(tx, q, walls) || segment_blocked(q, rx, walls)) continue;
        const double d1 = dist(tx, q), d2 = dist(q, rx);
        if (d1 + d2 == 0.0) continue;
        const Vec2 dir = q - tx;
        out.paths.push_back({w.coeff / (d1 + d2), std::atan2(dir.y, dir.x)});
    }
    return out;
}

double beam_gain(const PathSet& ps, const std::vector<cplx>& beam, const ArrayConfig& cfg) {
    if (beam.size() != cfg.n_antennas) {
        throw std::invalid_argument("beam_gain: beam length " + std::to_string(beam.size()) +
                                    " does not match array size " + std::to_string(cfg.n_antennas));
    }
    double acc = 0.0;
    for (const Path& p : ps.paths) {
        const auto a = steering_vector(p.aod, cfg);
        acc += p.gain * p.gain * beam_alignment_gain(a, beam);
    }
    return acc;
}

double measure_csi(const PathSet& ps, const std::vector<cplx>& beam, const ArrayConfig& cfg,
                   double noise_sigma, beammap::nn::Rng* rng) {
    if (noise_sigma < 0.0) throw std::invalid_argument("measure_csi: negative noise_sigma");
    double v = beam_gain(ps, beam, cfg);
    if (noise_sigma > 0.0) {
        if (!rng) throw std::invalid_argument("measure_csi: rng required when noise_sigma > 0");
        v += rng->normal(0.0, noise_sigma);
    }
    return v;
}

std::vector<cplx> sample_channel(const PathSet& ps, const ArrayConfig& cfg, beammap::nn::Rng& rng) {
    std::vector<cplx> h(cfg.n_antennas, cplx(0.0, 0.0));
    for (const Path& p : ps.paths) {
        const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const cplx phase(std::cos(theta) * p.gain, std::sin(theta) * p.gain);
        const auto a = steering_vector(p.aod, cfg);
        for (std::size_t k = 0; k < h.size(); ++k) h[k] += phase * a[k];
    }
    return h;
}

}  // namespace beammap::sim
