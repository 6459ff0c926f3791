#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beammap/cli/config.hpp"
#include "beammap/nn/params.hpp"
#include "beammap/rm/beam_map.hpp"
#include "beammap/rm/embedding.hpp"
#include "beammap/util/stats.hpp"

namespace beammap::cli {

// Trajectory-level split: the first trajectories train, the next validate,
// the tail is held out. Trajectories are exchangeable by construction, so a
// contiguous split is unbiased and reproducible.
struct Split {
    std::vector<std::size_t> train, val, test;
};
Split split_dataset(std::size_t n_traj, double val_fraction, double test_fraction);

// Turns raw sparse measurements into network inputs: log-compress observed
// powers, whiten per column with moments fitted on observed training
// entries, keep zeros off the mask.
struct InputCodec {
    double scale = 1.0;        // global mean observed power
    util::ColumnStats stats;   // per-column moments of log1p(value / scale)

    static InputCodec fit(const std::vector<const sim::TrajectoryData*>& trajs,
                          std::size_t n_beams);
    // (values, mask) pair of (L, n_beams) tensors for one trajectory.
    std::pair<nn::Tensor, nn::Tensor> encode(const sim::TrajectoryData& td) const;
};

nlohmann::json codec_to_json(const InputCodec& c);
InputCodec codec_from_json(const nlohmann::json& j);

// Everything a trained run needs at inference time. target_stats whiten the
// full CSI rows the decoder diffuses over; the embedding table and grid
// travel together.
struct Checkpoint {
    ExperimentConfig config;
    nn::ParamStore params;
    rm::EmbeddingTable table;
    util::ColumnStats target_stats;
    InputCodec codec;
    std::size_t best_epoch = 0;
    double val_loss = 0.0;
};

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Encoder inference on one trajectory.
struct EncoderRun {
    nn::Tensor zhat;  // (L, d_latent)
    nn::Tensor phat;  // (L, 2)
};
EncoderRun run_encoder(const Checkpoint& ckpt, const sim::TrajectoryData& td);

// Simulates the dataset, writes <dir>/dataset/*, the ground-truth beam map
// <dir>/truth_map.{json,csv}, and the stamped config copy <dir>/config.json.
void cmd_gen_data(const ExperimentConfig& cfg, const std::string& dir);

struct EpochLog {
    std::size_t epoch = 0;
    double l_s = 0, l_r = 0, l_c = 0, l_t = 0, l_d = 0, total = 0;
    double val_total = 0;
};

// Joint training of encoder, embedding table and denoiser. Reads
// <data_dir>/dataset, writes <out_dir>/checkpoint.json and
// <out_dir>/train_log.csv. The returned checkpoint is the best-by-validation
// snapshot that was written. A non-finite loss aborts after persisting the
// artifacts accumulated so far.
struct TrainResult {
    Checkpoint best;
    std::vector<EpochLog> log;
};
TrainResult cmd_train(const ExperimentConfig& cfg, const std::string& data_dir,
                      const std::string& out_dir);

struct EvalOptions {
    std::size_t tw_k = 10;
    std::vector<double> snr_db = {0.0};
};

// Held-out evaluation: localization metrics for the pipeline, the raw coarse
// feed and the Kalman baseline; beam-map reconstruction error; beam-tracking
// capacity ratios. Writes <out_dir>/metrics.json and
// <out_dir>/beam_map.{json,csv} and returns the metrics document.
nlohmann::json cmd_eval(const std::string& checkpoint_path, const std::string& data_dir,
                        const EvalOptions& opt, const std::string& out_dir);

// Per-step capacity traces (perfect / pipeline / baseline) for one
// trajectory at each SNR, written as CSV files under <out_dir>.
void cmd_track(const std::string& checkpoint_path, const std::string& data_dir,
               std::size_t trajectory, const std::vector<double>& snr_db,
               const std::string& out_dir);

// Summarizes a run directory into <dir>/report/: a markdown table plus
// error-vs-measurements and error-vs-trajectories CSVs across every
// metrics*.json present. Missing inputs are listed by name.
void cmd_report(const std::string& dir);

}  // namespace beammap::cli
