#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "beammap/sim/trajectory.hpp"
#include "beammap/sim/world.hpp"

namespace beammap::sim {

// One trajectory worth of sparse measurements. `values` rows hold zeros off
// the mask; `masks` lists the observed beam indices per step, ascending.
struct TrajectoryData {
    std::vector<double> timestamps;
    std::vector<Vec2> true_pos;
    std::vector<Vec2> coarse_pos;
    std::vector<std::vector<std::size_t>> masks;
    std::vector<std::vector<double>> values;

    std::size_t length() const { return timestamps.size(); }
};

struct DatasetConfig {
    std::size_t n_traj = 1;
    double duration = 10.0;
    double dt = 1.0;
    std::size_t m_observed = 2;  // observed beams per base station per step
    double sigma2_coarse = 400.0;
    double noise_sigma = 0.0;
    SpeedProfile profile;
};

struct Dataset {
    Environment env;
    ArrayConfig array;
    std::size_t beams_per_bs = 0;
    std::size_t n_beams = 0;  // bs count * beams_per_bs, columns per row
    DatasetConfig cfg;
    std::uint64_t seed = 0;
    std::vector<TrajectoryData> trajectories;
};

// Simulates n_traj independent walkers and their sparse beam measurements.
// Every trajectory, mask and noise draw runs on its own seed stream, so the
// result is independent of generation order and fully reproducible.
Dataset build_dataset(const Environment& env, const ArrayConfig& array, const Codebook& cb,
                      const DatasetConfig& cfg, std::uint64_t seed);

// Writes <dir>/header.json and <dir>/data.csv. Numbers use shortest
// round-trip formatting; rewriting the same dataset is byte-identical.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace beammap::sim
