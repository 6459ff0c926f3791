#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "beammap/diff/sampler.hpp"
#include "beammap/rm/embedding.hpp"
#include "beammap/rm/grid.hpp"
#include "beammap/sim/world.hpp"
#include "beammap/util/stats.hpp"

namespace beammap::rm {

// Expected beam powers at every cell center, one row per cell, column index
// bs * codebook.size() + beam.
nn::Tensor ground_truth_map(const sim::Environment& env, const sim::ArrayConfig& array,
                            const sim::Codebook& cb, const GridMap& grid);

// Reconstructed map: for each cell, run the reverse diffusion chain
// conditioned on that cell's embedding row and undo the target whitening.
// `samples` chains per cell are averaged to estimate the conditional mean.
// Chain s of cell k draws from noise stream k * samples + s, so regenerating
// any subset of cells reproduces the full run bit for bit.
nn::Tensor build_beam_map(const diff::Denoiser& dn, const nn::ParamStore& ps,
                          const diff::DiffusionSchedule& sched, const EmbeddingTable& table,
                          const util::ColumnStats& stats, std::uint64_t seed,
                          std::size_t samples = 1);

// Beam-map artifact: CSV of K rows by n_beams columns plus a JSON header
// carrying the grid, the whitening stats used during generation (absent for
// ground-truth maps), and the generation seed.
struct BeamMapFile {
    nn::Tensor map;
    GridMap grid;
    std::optional<util::ColumnStats> stats;
    std::uint64_t seed = 0;
};

void save_beam_map(const BeamMapFile& f, const std::string& csv_path,
                   const std::string& json_path);
BeamMapFile load_beam_map(const std::string& csv_path, const std::string& json_path);

}  // namespace beammap::rm
