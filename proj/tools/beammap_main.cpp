// Command-line front end: dataset generation, training, evaluation, beam
// tracking and report rendering over a shared artifact directory.
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "beammap/cli/config.hpp"
#include "beammap/cli/pipeline.hpp"

namespace {

beammap::cli::ExperimentConfig resolve_config(const std::string& path) {
    if (path.empty()) return beammap::cli::ExperimentConfig{};
    return beammap::cli::load_config(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generative beam-map construction pipeline"};
    app.require_subcommand(1);

    std::string config_path, dir = "run", checkpoint;
    std::size_t tw_k = 10, traj = 0;
    std::vector<double> snr{0.0};

    auto* gen = app.add_subcommand("gen-data", "simulate a dataset and the reference beam map");
    gen->add_option("--config", config_path, "experiment config json (defaults when omitted)");
    gen->add_option("--dir", dir, "artifact directory");

    auto* train = app.add_subcommand("train", "train encoder, embedding table and decoder");
    train->add_option("--config", config_path, "experiment config json (defaults when omitted)");
    train->add_option("--dir", dir, "artifact directory holding dataset/");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on held-out trajectories");
    eval->add_option("--checkpoint", checkpoint, "checkpoint path (default <dir>/checkpoint.json)");
    eval->add_option("--dir", dir, "artifact directory holding dataset/");
    eval->add_option("--tw-k", tw_k, "neighborhood size for trustworthiness/continuity");
    eval->add_option("--snr", snr, "beam-tracking SNR points in dB")->expected(-1);

    auto* track = app.add_subcommand("track", "per-step beam-tracking capacity for one walk");
    track->add_option("--checkpoint", checkpoint, "checkpoint path (default <dir>/checkpoint.json)");
    track->add_option("--dir", dir, "artifact directory holding dataset/");
    track->add_option("--traj", traj, "trajectory index");
    track->add_option("--snr", snr, "SNR points in dB")->expected(-1);

    auto* report = app.add_subcommand("report", "render summary tables from metrics files");
    report->add_option("--dir", dir, "artifact directory holding metrics.json");

    CLI11_PARSE(app, argc, argv);

    try {
        if (checkpoint.empty()) checkpoint = dir + "/checkpoint.json";
        if (gen->parsed()) {
            beammap::cli::cmd_gen_data(resolve_config(config_path), dir);
        } else if (train->parsed()) {
            const auto result =
                beammap::cli::cmd_train(resolve_config(config_path), dir, dir);
            std::printf("best epoch %zu, validation loss %.6g\n", result.best.best_epoch,
                        result.best.val_loss);
        } else if (eval->parsed()) {
            beammap::cli::EvalOptions opt;
            opt.tw_k = tw_k;
            opt.snr_db = snr;
            const auto metrics = beammap::cli::cmd_eval(checkpoint, dir, opt, dir);
            std::printf("%s\n", metrics.dump(2).c_str());
        } else if (track->parsed()) {
            beammap::cli::cmd_track(checkpoint, dir, traj, snr, dir);
        } else if (report->parsed()) {
            beammap::cli::cmd_report(dir);
        }
    } catch (const std::exception& e) {
        const nlohmann::json err{{"error", e.what()}};
        std::printf("%s\n", err.dump().c_str());
        return 1;
    }
    return 0;
}
