#pragma once

#include <vector>

#include "beammap/nn/rng.hpp"
#include "beammap/sim/array.hpp"
#include "beammap/sim/geometry.hpp"

namespace beammap::sim {

// One propagation path from a transmitter: amplitude gain and angle of
// departure (global frame, radians).
struct Path {
    double gain = 0.0;
    double aod = 0.0;
};

struct PathSet {
    std::vector<Path> paths;
};

// Line-of-sight (amplitude 1/d) plus single-bounce mirror-image reflections
// (amplitude coeff/(d1+d2)) from tx to rx. Paths blocked by walls are
// dropped. Requires tx != rx.
PathSet synth_paths(Vec2 tx, Vec2 rx, const std::vector<Wall>& walls);

// Expected received beam power under independent uniform path phases:
//   sum_l gain_l^2 * |a(aod_l)^H w|^2
double beam_gain(const PathSet& ps, const std::vector<cplx>& beam, const ArrayConfig& cfg);

// One power measurement: beam_gain plus N(0, noise_sigma^2) when
// noise_sigma > 0. rng may be null only for noise_sigma == 0.
double measure_csi(const PathSet& ps, const std::vector<cplx>& beam, const ArrayConfig& cfg,
                   double noise_sigma, beammap::nn::Rng* rng);

// One random channel realization h = sum_l gain_l * e^{i theta_l} * a(aod_l)
// with theta ~ U[0, 2pi). Used for capacity evaluation and for checking
// beam_gain against its Monte-Carlo average.
std::vector<cplx> sample_channel(const PathSet& ps, const ArrayConfig& cfg, beammap::nn::Rng& rng);

}  // namespace beammap::sim
