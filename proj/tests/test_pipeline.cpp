#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "beammap/cli/pipeline.hpp"
#include "beammap/util/io.hpp"

using namespace beammap;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "beammap_pipeline_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) { return util::read_text_file(p.string()); }

// Small but complete experiment: 4 antennas, 5x5 grid, 4 short trajectories.
cli::ExperimentConfig tiny_cfg() {
    cli::ExperimentConfig c;
    c.array.n_antennas = 4;
    c.grid_resolution = 20.0;
    c.data.n_traj = 4;
    c.data.duration = 9.0;
    c.data.dt = 1.0;
    c.data.m_observed = 2;
    c.data.profile.segments = {sim::SpeedSegment::constant(1.0, 9.0)};
    c.model.token_dim = 4;
    c.model.attn_ffn = 8;
    c.model.feature_tokens = 4;
    c.model.d_f = 8;
    c.model.d_latent = 4;
    c.model.window_k = 1;
    c.model.trunc_eps = 1;
    c.model.rnn_widths = {8};
    c.model.map_h = 2;
    c.model.map_w = 4;
    c.model.cnn_channels = 2;
    c.model.proj_hidden = 8;
    c.model.head_hidden = 8;
    c.model.diffusion_steps = 5;
    c.model.denoiser_width = 16;
    c.model.denoiser_layers = 1;
    c.model.time_dim = 4;
    c.model.map_samples = 1;
    c.training.epochs = 1;
    c.training.batch = 2;
    c.training.max_triplets = 200;
    c.training.val_fraction = 0.25;
    c.training.test_fraction = 0.25;
    c.training.seed = 3;
    return c;
}

}  // namespace

TEST_CASE("trajectory split is contiguous with a guaranteed test tail") {
    const cli::Split s = cli::split_dataset(50, 0.1, 0.1);
    REQUIRE(s.train.size() == 40);
    REQUIRE(s.val.size() == 5);
    REQUIRE(s.test.size() == 5);
    CHECK(s.train.front() == 0);
    CHECK(s.train.back() == 39);
    CHECK(s.val.front() == 40);
    CHECK(s.val.back() == 44);
    CHECK(s.test.front() == 45);
    CHECK(s.test.back() == 49);

    const cli::Split t = cli::split_dataset(3, 0.0, 0.1);  // rounds down but keeps one test
    CHECK(t.train.size() == 2);
    CHECK(t.val.empty());
    CHECK(t.test.size() == 1);

    CHECK_THROWS_AS(cli::split_dataset(10, 0.1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(cli::split_dataset(10, -0.1, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(cli::split_dataset(10, 0.6, 0.4), std::invalid_argument);
    CHECK_THROWS_AS(cli::split_dataset(1, 0.0, 0.5), std::invalid_argument);  // nothing to train on
}

TEST_CASE("input codec whitens observed log powers per column") {
    sim::TrajectoryData td;
    td.timestamps = {0.0, 1.0};
    td.true_pos = {{0, 0}, {1, 1}};
    td.coarse_pos = td.true_pos;
    td.values = {{4.0, 9.0, 0.0}, {2.0, 0.0, 0.0}};
    td.masks = {{0, 1}, {0}};

    const cli::InputCodec c = cli::InputCodec::fit({&td}, 3);
    CHECK(c.scale == doctest::Approx(5.0));  // mean of {4, 9, 2}

    const double a = std::log1p(4.0 / 5.0), b = std::log1p(2.0 / 5.0);
    const double mu0 = 0.5 * (a + b);
    const double sd0 = std::sqrt(0.5 * ((a - mu0) * (a - mu0) + (b - mu0) * (b - mu0)));
    CHECK(c.stats.mean[0] == doctest::Approx(mu0));
    CHECK(c.stats.stdev[0] == doctest::Approx(sd0));
    CHECK(c.stats.mean[1] == doctest::Approx(std::log1p(9.0 / 5.0)));
    CHECK(c.stats.stdev[1] == 1e-3);  // single observation hits the floor
    CHECK(c.stats.mean[2] == 0.0);    // never observed
    CHECK(c.stats.stdev[2] == 1.0);

    const auto [values, mask] = c.encode(td);
    CHECK(values.at(0, 0) == doctest::Approx((a - mu0) / sd0));
    CHECK(values.at(1, 0) == doctest::Approx((b - mu0) / sd0));
    CHECK(values.at(0, 1) == doctest::Approx(0.0));  // centered single observation
    CHECK(mask.at(0, 0) == 1.0);
    CHECK(mask.at(0, 1) == 1.0);
    CHECK(mask.at(0, 2) == 0.0);
    CHECK(mask.at(1, 1) == 0.0);
    CHECK(values.at(1, 1) == 0.0);

    const cli::InputCodec back = cli::codec_from_json(cli::codec_to_json(c));
    CHECK(back.scale == c.scale);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(back.stats.mean[k] == c.stats.mean[k]);
        CHECK(back.stats.stdev[k] == c.stats.stdev[k]);
    }

    sim::TrajectoryData bad = td;
    bad.values = {{1.0, 2.0}, {3.0, 4.0}};
    CHECK_THROWS_AS(c.encode(bad), std::invalid_argument);

    CHECK_THROWS_AS(cli::InputCodec::fit({}, 3), std::invalid_argument);
    sim::TrajectoryData unobserved = td;
    unobserved.masks = {{}, {}};
    CHECK_THROWS_AS(cli::InputCodec::fit({&unobserved}, 3), std::invalid_argument);
}

TEST_CASE("data generation writes a byte-reproducible bundle") {
    const auto cfg = tiny_cfg();
    const fs::path a = fresh_dir("gen_a"), b = fresh_dir("gen_b");
    cli::cmd_gen_data(cfg, a.string());
    cli::cmd_gen_data(cfg, b.string());

    for (const char* rel : {"dataset/header.json", "dataset/data.csv", "truth_map.json",
                            "truth_map.csv", "config.json"}) {
        REQUIRE(fs::exists(a / rel));
        CHECK(slurp(a / rel) == slurp(b / rel));
    }

    const auto meta = nlohmann::json::parse(slurp(a / "config.json"));
    CHECK(meta.at("config_hash") == cli::config_hash(cfg));
    const cli::ExperimentConfig parsed = cli::config_from_json(meta.at("config"));
    CHECK(cli::config_hash(parsed) == cli::config_hash(cfg));

    const sim::Dataset ds = sim::load_dataset((a / "dataset").string());
    CHECK(ds.trajectories.size() == cfg.data.n_traj);
    CHECK(ds.n_beams == cli::n_beams(cfg));
}

TEST_CASE("one epoch of training produces a loadable checkpoint") {
    const auto cfg = tiny_cfg();
    const fs::path dir = fresh_dir("train");
    cli::cmd_gen_data(cfg, dir.string());
    const cli::TrainResult res = cli::cmd_train(cfg, dir.string(), dir.string());

    REQUIRE(res.log.size() == 1);
    CHECK(res.log[0].epoch == 0);
    CHECK(std::isfinite(res.log[0].total));
    CHECK(std::isfinite(res.log[0].val_total));
    CHECK(res.best.best_epoch == 0);
    CHECK(res.best.val_loss == res.log[0].val_total);

    REQUIRE(fs::exists(dir / "checkpoint.json"));
    REQUIRE(fs::exists(dir / "train_log.csv"));
    const std::string log = slurp(dir / "train_log.csv");
    CHECK(log.rfind("epoch,l_selftrain,l_recon,l_coarse,l_triplet,l_dynamics,total,val_total\n",
                    0) == 0);
    CHECK(log.find("\n0,") != std::string::npos);

    // the serialized checkpoint reproduces the in-memory model exactly
    const cli::Checkpoint loaded = cli::load_checkpoint((dir / "checkpoint.json").string());
    CHECK(cli::config_hash(loaded.config) == cli::config_hash(cfg));
    CHECK(loaded.best_epoch == res.best.best_epoch);

    const sim::Dataset ds = sim::load_dataset((dir / "dataset").string());
    const cli::EncoderRun a = cli::run_encoder(res.best, ds.trajectories[3]);
    const cli::EncoderRun b = cli::run_encoder(loaded, ds.trajectories[3]);
    REQUIRE(a.phat.numel() == b.phat.numel());
    for (std::size_t i = 0; i < a.phat.numel(); ++i) CHECK(a.phat[i] == b.phat[i]);
    for (std::size_t i = 0; i < a.zhat.numel(); ++i) CHECK(a.zhat[i] == b.zhat[i]);
}

TEST_CASE("evaluation emits a stable metrics document") {
    const auto cfg = tiny_cfg();
    const fs::path dir = fresh_dir("eval");
    cli::cmd_gen_data(cfg, dir.string());
    cli::cmd_train(cfg, dir.string(), dir.string());

    cli::EvalOptions opt;
    opt.tw_k = 2;  // one 10-step test trajectory
    opt.snr_db = {0.0, 10.0};
    const fs::path e1 = fresh_dir("eval_out1"), e2 = fresh_dir("eval_out2");
    const nlohmann::json m1 = cli::cmd_eval((dir / "checkpoint.json").string(), dir.string(), opt,
                                            e1.string());
    cli::cmd_eval((dir / "checkpoint.json").string(), dir.string(), opt, e2.string());

    REQUIRE(fs::exists(e1 / "metrics.json"));
    REQUIRE(fs::exists(e1 / "beam_map.json"));
    REQUIRE(fs::exists(e1 / "beam_map.csv"));
    CHECK(slurp(e1 / "metrics.json") == slurp(e2 / "metrics.json"));
    CHECK(slurp(e1 / "beam_map.csv") == slurp(e2 / "beam_map.csv"));

    CHECK(m1.at("config_hash") == cli::config_hash(cfg));
    CHECK(m1.at("counts").at("test_trajectories") == 1);
    CHECK(m1.at("counts").at("steps") == 10);
    for (const char* method : {"proposed", "coarse", "skf"}) {
        const auto& sec = m1.at(method);
        CHECK(sec.at("mean_err").get<double>() >= 0.0);
        CHECK(sec.at("p95_err").get<double>() >= sec.at("mean_err").get<double>() - 1e-9);
        CHECK(sec.at("tw").get<double>() <= 1.0 + 1e-12);
        CHECK(sec.at("ct").get<double>() <= 1.0 + 1e-12);
    }
    CHECK(m1.at("beam_map").contains("nmse_held_out"));
    CHECK(m1.at("beam_map").contains("nmse_all"));
    REQUIRE(m1.at("tracking").size() == 2);
    CHECK(m1.at("tracking")[0].at("snr_db") == 0.0);
    CHECK(m1.at("tracking")[1].at("snr_db") == 10.0);

    // written metrics match the returned document
    CHECK(nlohmann::json::parse(slurp(e1 / "metrics.json")) == m1);
}

TEST_CASE("per-step tracking traces cover each requested snr") {
    const auto cfg = tiny_cfg();
    const fs::path dir = fresh_dir("track");
    cli::cmd_gen_data(cfg, dir.string());
    cli::cmd_train(cfg, dir.string(), dir.string());

    cli::cmd_track((dir / "checkpoint.json").string(), dir.string(), 3, {0.0, -2.5},
                   dir.string());
    for (const char* rel : {"track_traj3_snr0.csv", "track_traj3_snrm2p5.csv"}) {
        REQUIRE(fs::exists(dir / rel));
        const std::string csv = slurp(dir / rel);
        CHECK(csv.rfind("step,t,los,capacity_perfect,capacity_proposed,capacity_skf\n", 0) == 0);
        // header plus one row per trajectory step
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
    }
}

TEST_CASE("report requires metrics and then summarizes them") {
    const auto cfg = tiny_cfg();
    const fs::path dir = fresh_dir("report");
    CHECK_THROWS_WITH_AS(cli::cmd_report(dir.string()), doctest::Contains("metrics.json"),
                         std::runtime_error);

    cli::cmd_gen_data(cfg, dir.string());
    cli::cmd_train(cfg, dir.string(), dir.string());
    cli::EvalOptions opt;
    opt.tw_k = 2;
    cli::cmd_eval((dir / "checkpoint.json").string(), dir.string(), opt, dir.string());

    cli::cmd_report(dir.string());
    REQUIRE(fs::exists(dir / "report/summary.md"));
    const std::string md = slurp(dir / "report/summary.md");
    CHECK(md.find("# Run summary") != std::string::npos);
    CHECK(md.find("proposed") != std::string::npos);
    CHECK(md.find("Beam-map reconstruction") != std::string::npos);

    const std::string mcsv = slurp(dir / "report/error_vs_m.csv");
    CHECK(mcsv.rfind("m_per_bs,mean_err,p95_err\n", 0) == 0);
    CHECK(mcsv.find("\n2,") != std::string::npos);
    const std::string ncsv = slurp(dir / "report/error_vs_trajectories.csv");
    CHECK(ncsv.rfind("n_trajectories,mean_err,p95_err\n", 0) == 0);

    // idempotent
    cli::cmd_report(dir.string());
    CHECK(slurp(dir / "report/summary.md") == md);
}
