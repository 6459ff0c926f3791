#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "beammap/nn/rng.hpp"
#include "beammap/nn/tensor.hpp"
#include "beammap/sim/array.hpp"
#include "beammap/sim/channel.hpp"
#include "beammap/sim/geometry.hpp"

namespace beammap::sim {

// Static scene: world rectangle, base stations, reflective walls.
struct Environment {
    Rect bounds;
    std::vector<Vec2> bs_positions;
    std::vector<Wall> walls;
};

// Validates and assembles a scene. At least one base station; all base
// stations and wall endpoints must lie inside the bounds; wall coefficients
// in [0, 1].
Environment make_env(Rect bounds, std::vector<Vec2> bs_positions, std::vector<Wall> walls);

nlohmann::json env_to_json(const Environment& env);
Environment env_from_json(const nlohmann::json& j);

// Expected beam powers at position p for every (base station, beam) pair,
// column index bs * codebook.size() + beam.
std::vector<double> csi_row(const Environment& env, const ArrayConfig& cfg, const Codebook& cb,
                            Vec2 p);

// csi_row stacked along a path, one row per position.
nn::Tensor csi_rows(const Environment& env, const ArrayConfig& cfg, const Codebook& cb,
                    const std::vector<Vec2>& positions);

// m distinct beam indices out of n, uniform without replacement, ascending.
std::vector<std::size_t> sample_mask(std::size_t n, std::size_t m, beammap::nn::Rng& rng);

// Per-base-station variant: m_per_bs indices drawn independently inside each
// of the n_bs equal blocks of n_total, ascending overall.
std::vector<std::size_t> sample_mask(std::size_t n_total, std::size_t m_per_bs, std::size_t n_bs,
                                     beammap::nn::Rng& rng);

// Keeps the masked entries, zeroes the rest. Applying a mask twice equals
// applying it once.
std::vector<double> apply_mask(const std::vector<double>& row,
                               const std::vector<std::size_t>& mask);

// True when p has an unblocked line of sight to base station bs.
bool has_los(const Environment& env, std::size_t bs, Vec2 p);

}  // namespace beammap::sim
