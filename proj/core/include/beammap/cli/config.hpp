#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "beammap/diff/denoiser.hpp"
#include "beammap/enc/encoder.hpp"
#include "beammap/loss/losses.hpp"
#include "beammap/rm/grid.hpp"
#include "beammap/sim/dataset.hpp"

namespace beammap::cli {

// Network and codebook hyperparameters. Defaults are the desk-scale layout
// used throughout the test suite.
struct ModelConfig {
    std::size_t token_dim = 8;
    std::size_t attn_ffn = 32;
    std::size_t feature_tokens = 8;
    std::size_t d_f = 32;
    std::size_t d_latent = 16;
    std::size_t window_k = 2;
    std::size_t trunc_eps = 2;
    std::vector<std::size_t> rnn_widths = {32, 40, 48};
    std::size_t map_h = 6, map_w = 8;
    std::size_t cnn_channels = 4;
    std::size_t proj_hidden = 64;
    std::size_t head_hidden = 32;

    double alpha = 1.0;      // Student-t assignment dof
    double ema_decay = 0.99;
    double ema_zeta = 1e-5;

    std::size_t diffusion_steps = 50;
    double eta_min = 1e-4;
    double eta_max = 0.02;
    std::size_t denoiser_width = 128;
    std::size_t denoiser_layers = 3;
    std::size_t time_dim = 16;
    std::size_t map_samples = 4;  // reverse chains averaged per cell
};

struct TrainConfig {
    std::size_t epochs = 40;
    std::size_t batch = 1;  // trajectories per optimizer step
    double lr = 1e-3;
    loss::LossWeights weights;
    double triplet_margin = 1.0;     // meters
    double coherence_window = 2.0;   // seconds
    std::size_t max_triplets = 10000;
    double val_fraction = 0.1;
    double test_fraction = 0.1;
    std::uint64_t seed = 1;
};

// Full experiment description. A default-constructed value is the runnable
// desk-scale setup: 100x100 m world, 3 base stations, 8 antennas, two
// partially reflective walls, 5 m grid.
struct ExperimentConfig {
    sim::ArrayConfig array;
    sim::Environment env;
    double grid_resolution = 5.0;
    sim::DatasetConfig data;
    ModelConfig model;
    TrainConfig training;

    ExperimentConfig();
};

// Canonical serialization: every key present, fixed section order. Parsing
// starts from defaults, overrides the provided keys, rejects unknown keys
// with the offending section named, and validates cross-field constraints.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// FNV-1a over the canonical serialization; stamps artifacts.
std::string config_hash(const ExperimentConfig& cfg);

// Derived pieces. Beam count per base station always equals n_antennas (DFT
// codebook), so the measurement dimension is bs_count * n_antennas.
std::size_t n_beams(const ExperimentConfig& cfg);
rm::GridMap make_grid(const ExperimentConfig& cfg);
enc::EncoderConfig encoder_config(const ExperimentConfig& cfg);
diff::DenoiserConfig denoiser_config(const ExperimentConfig& cfg);

}  // namespace beammap::cli
