#include "beammap/cli/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <stdexcept>

#include "beammap/diff/sampler.hpp"
#include "beammap/enc/encoder.hpp"
#include "beammap/loss/losses.hpp"
#include "beammap/met/metrics.hpp"
#include "beammap/nn/optim.hpp"
#include "beammap/rm/assign.hpp"
#include "beammap/skf/kalman.hpp"
#include "beammap/util/io.hpp"

namespace beammap::cli {

namespace fs = std::filesystem;

namespace {

using util::fmt_double;

// Stream ids for the one master seed. Dataset generation owns 1e5..4e5
// (see build_dataset); everything else is spaced well clear of it.
constexpr std::uint64_t kStreamParams = 1;
constexpr std::uint64_t kStreamTable = 2;
constexpr std::uint64_t kStreamTrainBase = 400000;
constexpr std::uint64_t kStreamValBase = 500000;
constexpr std::uint64_t kMapSeedSalt = 0x62656d61700a5eedull;

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void require_dataset_matches(const ExperimentConfig& cfg, const sim::Dataset& ds) {
    const auto fail = [](const std::string& what) {
        throw std::invalid_argument("dataset does not match config: " + what);
    };
    if (sim::env_to_json(ds.env) != sim::env_to_json(cfg.env)) fail("environment");
    if (ds.array.n_antennas != cfg.array.n_antennas ||
        ds.array.element_spacing != cfg.array.element_spacing) {
        fail("array");
    }
    if (ds.beams_per_bs != cfg.array.n_antennas) fail("codebook size");
    if (ds.cfg.n_traj != cfg.data.n_traj) fail("n_trajectories");
    if (ds.cfg.m_observed != cfg.data.m_observed) fail("m_per_bs");
    if (ds.cfg.dt != cfg.data.dt || ds.cfg.duration != cfg.data.duration) fail("step layout");
    if (ds.cfg.sigma2_coarse != cfg.data.sigma2_coarse) fail("coarse_sigma2");
    if (ds.cfg.noise_sigma != cfg.data.noise_sigma) fail("noise_sigma");
}

nn::Tensor coarse_tensor(const sim::TrajectoryData& td) {
    nn::Tensor t({td.length(), 2});
    for (std::size_t l = 0; l < td.length(); ++l) {
        t.at(l, 0) = td.coarse_pos[l].x;
        t.at(l, 1) = td.coarse_pos[l].y;
    }
    return t;
}

std::vector<sim::Vec2> tensor_to_points(const nn::Tensor& t) {
    std::vector<sim::Vec2> out(t.rows());
    for (std::size_t l = 0; l < t.rows(); ++l) out[l] = {t.at(l, 0), t.at(l, 1)};
    return out;
}

// Shared forward pass + composite loss for one trajectory. The graph stays
// alive so the caller can run backward.
struct StepLosses {
    nn::Var total;
    double l_s, l_r, l_c, l_t, l_d, value;
    nn::Tensor zhat;                  // encoder latents, detached copy
    std::vector<std::size_t> cells;   // hard assignment per step
};

struct Model {
    enc::Encoder encoder;
    diff::Denoiser denoiser;
    diff::DiffusionSchedule sched;
    rm::GridMap grid;
    nn::Tensor centers;

    explicit Model(const ExperimentConfig& cfg)
        : encoder(encoder_config(cfg)),
          denoiser(denoiser_config(cfg)),
          sched(diff::make_schedule(cfg.model.diffusion_steps, cfg.model.eta_min,
                                    cfg.model.eta_max)),
          grid(make_grid(cfg)),
          centers(grid.centers()) {}
};

StepLosses trajectory_losses(nn::Graph& g, const Model& m, const ExperimentConfig& cfg,
                             const nn::ParamStore& ps, const rm::EmbeddingTable& table,
                             const nn::Tensor& values, const nn::Tensor& mask,
                             const nn::Tensor& coarse, const nn::Tensor& std_targets,
                             const std::vector<double>& timestamps, nn::Rng& rng) {
    const std::size_t L = values.rows();
    const std::size_t T = m.sched.steps();

    auto [zhat, phat] = m.encoder.forward(g, ps, values, mask);

    nn::Var soft = rm::soft_assign(g, phat, g.constant(m.centers), cfg.model.alpha);
    const nn::Tensor soft_v = g.value(soft);
    const nn::Tensor target = rm::target_distribution(soft_v);
    nn::Var l_s = loss::loss_selftrain(g, soft, target);

    std::vector<std::size_t> cells = rm::assign_cells(soft_v);
    nn::Tensor table_rows({L, table.dim()});
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t j = 0; j < table.dim(); ++j) {
            table_rows.at(l, j) = table.vectors.at(cells[l], j);
        }
    }
    nn::Var zq = rm::quantize_st(g, zhat, g.constant(table_rows));

    // One (t, noise) draw per step; rows are independent diffusion samples.
    std::vector<std::size_t> t_steps(L);
    nn::Tensor noise({L, std_targets.cols()});
    nn::Tensor g_t({L, std_targets.cols()});
    for (std::size_t l = 0; l < L; ++l) {
        t_steps[l] = 1 + rng.uniform_index(T);
        nn::Tensor g0_row({1, std_targets.cols()});
        nn::Tensor eps_row({1, std_targets.cols()});
        for (std::size_t j = 0; j < std_targets.cols(); ++j) {
            g0_row.at(0, j) = std_targets.at(l, j);
            eps_row.at(0, j) = rng.normal();
            noise.at(l, j) = eps_row.at(0, j);
        }
        const nn::Tensor noisy = diff::forward_sample(g0_row, t_steps[l], eps_row, m.sched);
        for (std::size_t j = 0; j < std_targets.cols(); ++j) g_t.at(l, j) = noisy.at(0, j);
    }
    nn::Var eps_hat =
        m.denoiser.forward(g, ps, g.constant(std::move(g_t)), zq, t_steps, m.sched);
    nn::Var l_r = loss::loss_recon(g, noise, eps_hat, zhat, zq, true);

    nn::Var l_c = loss::loss_coarse(g, phat, coarse);

    auto triplets = loss::build_triplets(timestamps, cfg.training.coherence_window);
    triplets = loss::subsample_triplets(std::move(triplets), cfg.training.max_triplets, rng);
    nn::Var l_t = loss::loss_triplet(g, phat, triplets, cfg.training.triplet_margin);

    nn::Var l_d = loss::loss_dynamics(g, phat);

    StepLosses out;
    out.total = loss::loss_total(g, l_s, l_r, l_c, l_t, l_d, cfg.training.weights);
    out.l_s = g.value(l_s)[0];
    out.l_r = g.value(l_r)[0];
    out.l_c = g.value(l_c)[0];
    out.l_t = g.value(l_t)[0];
    out.l_d = g.value(l_d)[0];
    out.value = g.value(out.total)[0];
    out.zhat = g.value(zhat);
    out.cells = std::move(cells);
    return out;
}

std::string log_to_csv(const std::vector<EpochLog>& log) {
    std::string csv = "epoch,l_selftrain,l_recon,l_coarse,l_triplet,l_dynamics,total,val_total\n";
    for (const EpochLog& e : log) {
        csv += std::to_string(e.epoch);
        for (double v : {e.l_s, e.l_r, e.l_c, e.l_t, e.l_d, e.total, e.val_total}) {
            csv += ',';
            csv += fmt_double(v);
        }
        csv += '\n';
    }
    return csv;
}

}  // namespace

Split split_dataset(std::size_t n_traj, double val_fraction, double test_fraction) {
    if (val_fraction < 0.0 || test_fraction <= 0.0 || val_fraction + test_fraction >= 1.0) {
        throw std::invalid_argument("split_dataset: invalid fractions");
    }
    const std::size_t n_test =
        std::max<std::size_t>(1, static_cast<std::size_t>(n_traj * test_fraction));
    const std::size_t n_val = static_cast<std::size_t>(n_traj * val_fraction);
    if (n_test + n_val >= n_traj) {
        throw std::invalid_argument("split_dataset: no training trajectories left");
    }
    Split s;
    for (std::size_t i = 0; i < n_traj - n_val - n_test; ++i) s.train.push_back(i);
    for (std::size_t i = n_traj - n_val - n_test; i < n_traj - n_test; ++i) s.val.push_back(i);
    for (std::size_t i = n_traj - n_test; i < n_traj; ++i) s.test.push_back(i);
    return s;
}

InputCodec InputCodec::fit(const std::vector<const sim::TrajectoryData*>& trajs,
                           std::size_t n_beams) {
    if (trajs.empty()) throw std::invalid_argument("InputCodec::fit: no trajectories");
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto* td : trajs) {
        for (std::size_t l = 0; l < td->length(); ++l) {
            for (std::size_t k : td->masks[l]) {
                sum += std::max(0.0, td->values[l][k]);
                ++count;
            }
        }
    }
    if (count == 0) throw std::invalid_argument("InputCodec::fit: no observed entries");

    InputCodec c;
    c.scale = std::max(sum / static_cast<double>(count), 1e-12);
    // Per-column moments of the log-compressed observed values.
    std::vector<double> n(n_beams, 0.0), mu(n_beams, 0.0), m2(n_beams, 0.0);
    for (const auto* td : trajs) {
        for (std::size_t l = 0; l < td->length(); ++l) {
            for (std::size_t k : td->masks[l]) {
                const double x = std::log1p(std::max(0.0, td->values[l][k]) / c.scale);
                n[k] += 1.0;
                const double d = x - mu[k];
                mu[k] += d / n[k];
                m2[k] += d * (x - mu[k]);
            }
        }
    }
    c.stats.mean.assign(n_beams, 0.0);
    c.stats.stdev.assign(n_beams, 1.0);
    for (std::size_t k = 0; k < n_beams; ++k) {
        if (n[k] < 1.0) continue;  // never observed during training; masked anyway
        c.stats.mean[k] = mu[k];
        c.stats.stdev[k] = std::max(std::sqrt(m2[k] / n[k]), 1e-3);
    }
    return c;
}

std::pair<nn::Tensor, nn::Tensor> InputCodec::encode(const sim::TrajectoryData& td) const {
    const std::size_t L = td.length(), B = stats.mean.size();
    nn::Tensor values({L, B});
    nn::Tensor mask({L, B});
    for (std::size_t l = 0; l < L; ++l) {
        if (td.values[l].size() != B) {
            throw std::invalid_argument("InputCodec::encode: row has " +
                                        std::to_string(td.values[l].size()) +
                                        " beams, codec expects " + std::to_string(B));
        }
        for (std::size_t k : td.masks[l]) {
            const double x = std::log1p(std::max(0.0, td.values[l][k]) / scale);
            values.at(l, k) = (x - stats.mean[k]) / stats.stdev[k];
            mask.at(l, k) = 1.0;
        }
    }
    return {std::move(values), std::move(mask)};
}

nlohmann::json codec_to_json(const InputCodec& c) {
    return {{"scale", c.scale}, {"stats", util::stats_to_json(c.stats)}};
}

InputCodec codec_from_json(const nlohmann::json& j) {
    InputCodec c;
    c.scale = j.at("scale").get<double>();
    c.stats = util::stats_from_json(j.at("stats"));
    if (!(c.scale > 0.0)) throw std::invalid_argument("codec_from_json: scale must be positive");
    return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
    nlohmann::json j{{"format_version", 1},
                     {"config", config_to_json(c.config)},
                     {"config_hash", config_hash(c.config)},
                     {"grid", rm::grid_to_json(make_grid(c.config))},
                     {"params", nn::params_to_json(c.params)},
                     {"table", rm::table_to_json(c.table)},
                     {"target_stats", util::stats_to_json(c.target_stats)},
                     {"input_codec", codec_to_json(c.codec)},
                     {"best_epoch", c.best_epoch},
                     {"val_loss", c.val_loss}};
    util::write_text_file(path, j.dump() + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
    const nlohmann::json j = nlohmann::json::parse(util::read_text_file(path));
    if (j.at("format_version").get<int>() != 1) {
        throw std::runtime_error("load_checkpoint: unsupported format version");
    }
    Checkpoint c;
    c.config = config_from_json(j.at("config"));
    c.params = nn::params_from_json(j.at("params"));
    c.table = rm::table_from_json(j.at("table"));
    c.target_stats = util::stats_from_json(j.at("target_stats"));
    c.codec = codec_from_json(j.at("input_codec"));
    c.best_epoch = j.at("best_epoch").get<std::size_t>();
    c.val_loss = j.at("val_loss").get<double>();
    const rm::GridMap grid = make_grid(c.config);
    if (rm::grid_to_json(grid) != j.at("grid")) {
        throw std::runtime_error("load_checkpoint: stored grid disagrees with config");
    }
    if (c.table.cells() != grid.size() || c.table.dim() != c.config.model.d_latent) {
        throw std::runtime_error("load_checkpoint: embedding table shape mismatch");
    }
    return c;
}

EncoderRun run_encoder(const Checkpoint& ckpt, const sim::TrajectoryData& td) {
    const Model m(ckpt.config);
    auto [values, mask] = ckpt.codec.encode(td);
    nn::Graph g;
    auto out = m.encoder.forward(g, ckpt.params, values, mask);
    return {g.value(out.zhat), g.value(out.phat)};
}

void cmd_gen_data(const ExperimentConfig& cfg, const std::string& dir) {
    ensure_dir(dir);
    ensure_dir(join(dir, "dataset"));

    const sim::Codebook cb = sim::dft_codebook(cfg.array);
    const sim::Dataset ds = sim::build_dataset(cfg.env, cfg.array, cb, cfg.data,
                                               cfg.training.seed);
    sim::save_dataset(ds, join(dir, "dataset"));

    const rm::GridMap grid = make_grid(cfg);
    rm::BeamMapFile truth;
    truth.map = rm::ground_truth_map(cfg.env, cfg.array, cb, grid);
    truth.grid = grid;
    truth.seed = cfg.training.seed;
    rm::save_beam_map(truth, join(dir, "truth_map.csv"), join(dir, "truth_map.json"));

    nlohmann::json meta{{"format_version", 1},
                        {"config_hash", config_hash(cfg)},
                        {"config", config_to_json(cfg)}};
    util::write_text_file(join(dir, "config.json"), meta.dump(2) + "\n");
}

TrainResult cmd_train(const ExperimentConfig& cfg, const std::string& data_dir,
                      const std::string& out_dir) {
    ensure_dir(out_dir);
    const sim::Dataset ds = sim::load_dataset(join(data_dir, "dataset"));
    require_dataset_matches(cfg, ds);

    const std::uint64_t seed = cfg.training.seed;
    const std::size_t n_traj = ds.trajectories.size();
    const Split split = split_dataset(n_traj, cfg.training.val_fraction,
                                      cfg.training.test_fraction);

    const Model model(cfg);
    const sim::Codebook cb = sim::dft_codebook(cfg.array);

    nn::ParamStore ps;
    {
        nn::Rng rng = nn::Rng::stream(seed, kStreamParams);
        model.encoder.init_params(ps, rng);
        model.denoiser.init_params(ps, rng);
    }
    nn::Rng rng_table = nn::Rng::stream(seed, kStreamTable);
    rm::EmbeddingTable table = rm::EmbeddingTable::init(
        model.grid.size(), cfg.model.d_latent, rng_table, cfg.model.ema_decay,
        cfg.model.ema_zeta);

    // Decoder targets: the simulator's full CSI rows along each walk,
    // whitened per column with statistics from the training split.
    std::vector<nn::Tensor> targets(n_traj);
    for (std::size_t i = 0; i < n_traj; ++i) {
        targets[i] = sim::csi_rows(ds.env, ds.array, cb, ds.trajectories[i].true_pos);
    }
    util::ColumnStats target_stats;
    {
        std::size_t rows = 0;
        for (std::size_t i : split.train) rows += targets[i].rows();
        nn::Tensor all({rows, ds.n_beams});
        std::size_t r = 0;
        for (std::size_t i : split.train) {
            for (std::size_t l = 0; l < targets[i].rows(); ++l, ++r) {
                for (std::size_t j = 0; j < ds.n_beams; ++j) all.at(r, j) = targets[i].at(l, j);
            }
        }
        target_stats = util::ColumnStats::fit(all);
    }
    std::vector<nn::Tensor> std_targets(n_traj);
    for (std::size_t i = 0; i < n_traj; ++i) std_targets[i] = target_stats.transform(targets[i]);

    std::vector<const sim::TrajectoryData*> train_ptrs;
    for (std::size_t i : split.train) train_ptrs.push_back(&ds.trajectories[i]);
    const InputCodec codec = InputCodec::fit(train_ptrs, ds.n_beams);

    std::vector<nn::Tensor> in_values(n_traj), in_mask(n_traj), coarse(n_traj);
    for (std::size_t i = 0; i < n_traj; ++i) {
        auto [v, m] = codec.encode(ds.trajectories[i]);
        in_values[i] = std::move(v);
        in_mask[i] = std::move(m);
        coarse[i] = coarse_tensor(ds.trajectories[i]);
    }

    nn::Adam adam({cfg.training.lr});
    TrainResult result;
    result.best.config = cfg;
    result.best.target_stats = target_stats;
    result.best.codec = codec;
    double best_val = std::numeric_limits<double>::infinity();
    bool have_best = false;

    const auto persist = [&]() {
        if (have_best) save_checkpoint(result.best, join(out_dir, "checkpoint.json"));
        util::write_text_file(join(out_dir, "train_log.csv"), log_to_csv(result.log));
    };

    try {
        for (std::size_t epoch = 0; epoch < cfg.training.epochs; ++epoch) {
            EpochLog log;
            log.epoch = epoch;

            std::map<std::string, nn::Tensor> acc;
            std::size_t in_chunk = 0;
            const auto flush = [&]() {
                if (in_chunk == 0) return;
                for (auto& [name, grad] : acc) {
                    for (double& v : grad.data()) v /= static_cast<double>(in_chunk);
                }
                adam.step(ps, acc);
                acc.clear();
                in_chunk = 0;
            };

            for (std::size_t i : split.train) {
                nn::Rng rng = nn::Rng::stream(seed, kStreamTrainBase + epoch * n_traj + i);
                nn::Graph g;
                StepLosses sl = trajectory_losses(g, model, cfg, ps, table, in_values[i],
                                                  in_mask[i], coarse[i], std_targets[i],
                                                  ds.trajectories[i].timestamps, rng);
                g.backward(sl.total);
                for (auto& [name, grad] : g.param_grads()) {
                    auto it = acc.find(name);
                    if (it == acc.end()) {
                        acc.emplace(name, std::move(grad));
                    } else {
                        for (std::size_t v = 0; v < grad.numel(); ++v) it->second[v] += grad[v];
                    }
                }
                if (++in_chunk == cfg.training.batch) flush();

                std::map<std::size_t, rm::CellBatch> batches;
                for (std::size_t l = 0; l < sl.cells.size(); ++l) {
                    auto [it, unused] = batches.try_emplace(sl.cells[l]);
                    it->second.cell = sl.cells[l];
                    std::vector<double> z(sl.zhat.cols());
                    for (std::size_t j = 0; j < z.size(); ++j) z[j] = sl.zhat.at(l, j);
                    it->second.latents.push_back(std::move(z));
                }
                std::vector<rm::CellBatch> list;
                list.reserve(batches.size());
                for (auto& [cell, batch] : batches) list.push_back(std::move(batch));
                rm::ema_update(table, list);

                log.l_s += sl.l_s;
                log.l_r += sl.l_r;
                log.l_c += sl.l_c;
                log.l_t += sl.l_t;
                log.l_d += sl.l_d;
                log.total += sl.value;
            }
            flush();
            const double inv_train = 1.0 / static_cast<double>(split.train.size());
            log.l_s *= inv_train;
            log.l_r *= inv_train;
            log.l_c *= inv_train;
            log.l_t *= inv_train;
            log.l_d *= inv_train;
            log.total *= inv_train;

            if (!split.val.empty()) {
                double val = 0.0;
                for (std::size_t i : split.val) {
                    nn::Rng rng = nn::Rng::stream(seed, kStreamValBase + epoch * n_traj + i);
                    nn::Graph g;
                    val += trajectory_losses(g, model, cfg, ps, table, in_values[i], in_mask[i],
                                             coarse[i], std_targets[i],
                                             ds.trajectories[i].timestamps, rng)
                               .value;
                }
                log.val_total = val / static_cast<double>(split.val.size());
            } else {
                log.val_total = log.total;
            }
            result.log.push_back(log);

            if (log.val_total < best_val) {
                best_val = log.val_total;
                result.best.params = ps;
                result.best.table = table;
                result.best.best_epoch = epoch;
                result.best.val_loss = log.val_total;
                have_best = true;
            }
        }
    } catch (const std::runtime_error& e) {
        persist();
        throw std::runtime_error(std::string("training aborted: ") + e.what() +
                                 (have_best ? "; last good checkpoint retained"
                                            : "; no checkpoint was reached"));
    }

    persist();
    return result;
}

namespace {

// Per-SNR beam-tracking tally over one LOS class.
struct CapacitySums {
    double perfect = 0.0, proposed = 0.0, skf = 0.0;
    std::size_t steps = 0;
};

nlohmann::json method_metrics(const std::vector<sim::Vec2>& truth,
                              const std::vector<sim::Vec2>& pred,
                              const std::vector<std::vector<sim::Vec2>>& per_traj_truth,
                              const std::vector<std::vector<sim::Vec2>>& per_traj_pred,
                              std::size_t tw_k) {
    std::vector<double> errors(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) errors[i] = sim::dist(truth[i], pred[i]);

    // Mean second-difference energy and early-segment error, per trajectory.
    double sde = 0.0, head = 0.0;
    std::size_t head_count = 0;
    for (std::size_t t = 0; t < per_traj_pred.size(); ++t) {
        const auto& p = per_traj_pred[t];
        if (p.size() >= 3) {
            double acc = 0.0;
            for (std::size_t l = 1; l + 1 < p.size(); ++l) {
                const double ax = p[l + 1].x - 2 * p[l].x + p[l - 1].x;
                const double ay = p[l + 1].y - 2 * p[l].y + p[l - 1].y;
                acc += ax * ax + ay * ay;
            }
            sde += acc / static_cast<double>(p.size() - 2);
        }
        const std::size_t n_head = std::min<std::size_t>(10, p.size());
        for (std::size_t l = 0; l < n_head; ++l, ++head_count) {
            head += sim::dist(per_traj_truth[t][l], p[l]);
        }
    }
    if (!per_traj_pred.empty()) sde /= static_cast<double>(per_traj_pred.size());
    if (head_count) head /= static_cast<double>(head_count);

    return {{"mean_err", met::mean_error(truth, pred)},
            {"p95_err", met::percentile95(errors)},
            {"tw", met::trustworthiness(truth, pred, tw_k)},
            {"ct", met::continuity(truth, pred, tw_k)},
            {"second_diff_energy", sde},
            {"head_mean_err", head}};
}

}  // namespace

nlohmann::json cmd_eval(const std::string& checkpoint_path, const std::string& data_dir,
                        const EvalOptions& opt, const std::string& out_dir) {
    ensure_dir(out_dir);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const ExperimentConfig& cfg = ckpt.config;
    const sim::Dataset ds = sim::load_dataset(join(data_dir, "dataset"));
    require_dataset_matches(cfg, ds);

    const Model model(cfg);
    const sim::Codebook cb = sim::dft_codebook(cfg.array);
    const Split split = split_dataset(ds.trajectories.size(), cfg.training.val_fraction,
                                      cfg.training.test_fraction);

    // Held-out inference for the pipeline and the baselines.
    std::vector<std::vector<sim::Vec2>> truth_t, prop_t, coarse_t, skf_t;
    const nn::Tensor truth_map = rm::ground_truth_map(cfg.env, cfg.array, cb, model.grid);
    skf::SkfConfig skf_cfg;
    skf_cfg.obs_std_coarse = std::sqrt(std::max(cfg.data.sigma2_coarse, 1.0));
    skf_cfg.obs_std_map = cfg.grid_resolution;
    for (std::size_t i : split.test) {
        const sim::TrajectoryData& td = ds.trajectories[i];
        truth_t.push_back(td.true_pos);
        coarse_t.push_back(td.coarse_pos);
        prop_t.push_back(tensor_to_points(run_encoder(ckpt, td).phat));
        skf_t.push_back(skf::track(td.coarse_pos, td.values, td.masks, truth_map, model.grid,
                                   cfg.data.dt, skf_cfg));
    }
    std::vector<sim::Vec2> truth, prop, coarse, skf_pos;
    for (std::size_t t = 0; t < truth_t.size(); ++t) {
        truth.insert(truth.end(), truth_t[t].begin(), truth_t[t].end());
        prop.insert(prop.end(), prop_t[t].begin(), prop_t[t].end());
        coarse.insert(coarse.end(), coarse_t[t].begin(), coarse_t[t].end());
        skf_pos.insert(skf_pos.end(), skf_t[t].begin(), skf_t[t].end());
    }

    // Reconstructed beam map, evaluated on the cells the held-out walks
    // visit and on the full grid.
    const std::uint64_t map_seed = nn::splitmix64(cfg.training.seed ^ kMapSeedSalt);
    const nn::Tensor gen_map =
        rm::build_beam_map(model.denoiser, ckpt.params, model.sched, ckpt.table,
                           ckpt.target_stats, map_seed, cfg.model.map_samples);
    rm::BeamMapFile map_file{gen_map, model.grid, ckpt.target_stats, map_seed};
    rm::save_beam_map(map_file, join(out_dir, "beam_map.csv"), join(out_dir, "beam_map.json"));

    std::vector<std::size_t> held_cells;
    {
        std::vector<char> seen(model.grid.size(), 0);
        for (const auto& traj : truth_t) {
            for (sim::Vec2 p : traj) seen[model.grid.nearest_cell(p)] = 1;
        }
        for (std::size_t k = 0; k < seen.size(); ++k) {
            if (seen[k]) held_cells.push_back(k);
        }
    }
    const met::MapError err_held = met::map_error(gen_map, truth_map, held_cells);
    const met::MapError err_all = met::map_error(gen_map, truth_map);

    // Beam tracking: each method picks its beam from its own map at its own
    // position estimate; capacity uses the expected gains at the true spot.
    nlohmann::json tracking = nlohmann::json::array();
    std::size_t clamped = 0;
    {
        std::vector<std::vector<double>> gains;  // per pooled step, all beams
        std::vector<std::size_t> best_beam;
        std::vector<bool> los;
        std::vector<double> gain_prop, gain_skf;
        for (std::size_t t = 0; t < truth_t.size(); ++t) {
            for (std::size_t l = 0; l < truth_t[t].size(); ++l) {
                const sim::Vec2 p = truth_t[t][l];
                gains.push_back(sim::csi_row(cfg.env, cfg.array, cb, p));
                const auto& row = gains.back();
                const std::size_t jstar = rm::argmax_index(row.data(), row.size());
                best_beam.push_back(jstar);
                los.push_back(sim::has_los(cfg.env, jstar / cb.size(), p));

                const sim::Vec2 pp = prop_t[t][l];
                if (!cfg.env.bounds.contains(pp)) ++clamped;
                const std::size_t cell_p = model.grid.nearest_cell(pp);
                std::vector<double> map_row(gen_map.cols());
                for (std::size_t j = 0; j < gen_map.cols(); ++j) {
                    map_row[j] = gen_map.at(cell_p, j);
                }
                gain_prop.push_back(row[rm::argmax_index(map_row.data(), map_row.size())]);

                const std::size_t cell_s = model.grid.nearest_cell(skf_t[t][l]);
                std::vector<double> truth_row(truth_map.cols());
                for (std::size_t j = 0; j < truth_map.cols(); ++j) {
                    truth_row[j] = truth_map.at(cell_s, j);
                }
                gain_skf.push_back(row[rm::argmax_index(truth_row.data(), truth_row.size())]);
            }
        }
        double mean_best = 0.0;
        for (std::size_t i = 0; i < gains.size(); ++i) mean_best += gains[i][best_beam[i]];
        mean_best /= static_cast<double>(gains.size());

        for (double snr_db : opt.snr_db) {
            // SNR defined against the mean best-beam gain with unit noise power.
            const double p_t = std::pow(10.0, snr_db / 10.0) / mean_best;
            const auto cap = [&](double gain) { return std::log2(1.0 + p_t * gain); };
            CapacitySums los_sum, nlos_sum;
            for (std::size_t i = 0; i < gains.size(); ++i) {
                CapacitySums& s = los[i] ? los_sum : nlos_sum;
                s.perfect += cap(gains[i][best_beam[i]]);
                s.proposed += cap(gain_prop[i]);
                s.skf += cap(gain_skf[i]);
                ++s.steps;
            }
            const auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
            tracking.push_back(
                {{"snr_db", snr_db},
                 {"los_steps", los_sum.steps},
                 {"nlos_steps", nlos_sum.steps},
                 {"ratio_los",
                  {{"proposed", ratio(los_sum.proposed, los_sum.perfect)},
                   {"skf", ratio(los_sum.skf, los_sum.perfect)}}},
                 {"ratio_nlos",
                  {{"proposed", ratio(nlos_sum.proposed, nlos_sum.perfect)},
                   {"skf", ratio(nlos_sum.skf, nlos_sum.perfect)}}}});
        }
    }

    nlohmann::json metrics{
        {"format_version", 1},
        {"config_hash", config_hash(cfg)},
        {"seed", cfg.training.seed},
        {"tw_k", opt.tw_k},
        {"m_per_bs", cfg.data.m_observed},
        {"n_trajectories", cfg.data.n_traj},
        {"counts",
         {{"test_trajectories", split.test.size()},
          {"steps", truth.size()},
          {"held_out_cells", held_cells.size()},
          {"clamped_steps", clamped}}},
        {"proposed", method_metrics(truth, prop, truth_t, prop_t, opt.tw_k)},
        {"coarse", method_metrics(truth, coarse, truth_t, coarse_t, opt.tw_k)},
        {"skf", method_metrics(truth, skf_pos, truth_t, skf_t, opt.tw_k)},
        {"beam_map",
         {{"nmse_held_out", err_held.nmse},
          {"rmse_held_out", err_held.rmse},
          {"nmse_all", err_all.nmse},
          {"rmse_all", err_all.rmse}}},
        {"tracking", std::move(tracking)}};

    util::write_text_file(join(out_dir, "metrics.json"), metrics.dump(2) + "\n");
    return metrics;
}

void cmd_track(const std::string& checkpoint_path, const std::string& data_dir,
               std::size_t trajectory, const std::vector<double>& snr_db,
               const std::string& out_dir) {
    ensure_dir(out_dir);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const ExperimentConfig& cfg = ckpt.config;
    const sim::Dataset ds = sim::load_dataset(join(data_dir, "dataset"));
    require_dataset_matches(cfg, ds);
    if (trajectory >= ds.trajectories.size()) {
        throw std::invalid_argument("track: trajectory index out of range");
    }

    const Model model(cfg);
    const sim::Codebook cb = sim::dft_codebook(cfg.array);
    const sim::TrajectoryData& td = ds.trajectories[trajectory];
    const nn::Tensor truth_map = rm::ground_truth_map(cfg.env, cfg.array, cb, model.grid);

    const std::uint64_t map_seed = nn::splitmix64(cfg.training.seed ^ kMapSeedSalt);
    const nn::Tensor gen_map =
        rm::build_beam_map(model.denoiser, ckpt.params, model.sched, ckpt.table,
                           ckpt.target_stats, map_seed, cfg.model.map_samples);

    const auto prop = tensor_to_points(run_encoder(ckpt, td).phat);
    skf::SkfConfig skf_cfg;
    skf_cfg.obs_std_coarse = std::sqrt(std::max(cfg.data.sigma2_coarse, 1.0));
    skf_cfg.obs_std_map = cfg.grid_resolution;
    const auto skf_pos = skf::track(td.coarse_pos, td.values, td.masks, truth_map, model.grid,
                                    cfg.data.dt, skf_cfg);

    std::vector<std::vector<double>> gains(td.length());
    std::vector<std::size_t> best(td.length());
    double mean_best = 0.0;
    for (std::size_t l = 0; l < td.length(); ++l) {
        gains[l] = sim::csi_row(cfg.env, cfg.array, cb, td.true_pos[l]);
        best[l] = rm::argmax_index(gains[l].data(), gains[l].size());
        mean_best += gains[l][best[l]];
    }
    mean_best /= static_cast<double>(td.length());

    for (double db : snr_db) {
        const double p_t = std::pow(10.0, db / 10.0) / mean_best;
        const auto cap = [&](double gain) { return std::log2(1.0 + p_t * gain); };
        std::string csv = "step,t,los,capacity_perfect,capacity_proposed,capacity_skf\n";
        for (std::size_t l = 0; l < td.length(); ++l) {
            const auto& row = gains[l];
            const bool los = sim::has_los(cfg.env, best[l] / cb.size(), td.true_pos[l]);

            std::vector<double> map_row(gen_map.cols());
            const std::size_t cell_p = model.grid.nearest_cell(prop[l]);
            for (std::size_t j = 0; j < gen_map.cols(); ++j) map_row[j] = gen_map.at(cell_p, j);
            const double g_prop = row[rm::argmax_index(map_row.data(), map_row.size())];

            std::vector<double> truth_row(truth_map.cols());
            const std::size_t cell_s = model.grid.nearest_cell(skf_pos[l]);
            for (std::size_t j = 0; j < truth_map.cols(); ++j) {
                truth_row[j] = truth_map.at(cell_s, j);
            }
            const double g_skf = row[rm::argmax_index(truth_row.data(), truth_row.size())];

            csv += std::to_string(l) + ',' + fmt_double(td.timestamps[l]) + ',' +
                   (los ? '1' : '0') + ',' + fmt_double(cap(row[best[l]])) + ',' +
                   fmt_double(cap(g_prop)) + ',' + fmt_double(cap(g_skf)) + '\n';
        }
        std::string label = fmt_double(db);
        for (char& ch : label) {
            if (ch == '-') ch = 'm';
            if (ch == '.') ch = 'p';
        }
        util::write_text_file(
            join(out_dir, "track_traj" + std::to_string(trajectory) + "_snr" + label + ".csv"),
            csv);
    }
}

void cmd_report(const std::string& dir) {
    std::vector<std::string> metric_files;
    if (fs::is_directory(dir)) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("metrics", 0) == 0 && name.size() > 5 &&
                name.substr(name.size() - 5) == ".json") {
                metric_files.push_back(name);
            }
        }
    }
    std::sort(metric_files.begin(), metric_files.end());

    std::vector<std::string> missing;
    if (!fs::exists(join(dir, "metrics.json"))) missing.push_back("metrics.json");
    if (!missing.empty()) {
        std::string what = "report: missing artifacts:";
        for (const auto& name : missing) what += ' ' + name;
        throw std::runtime_error(what);
    }

    std::map<std::string, nlohmann::json> docs;
    for (const auto& name : metric_files) {
        docs[name] = nlohmann::json::parse(util::read_text_file(join(dir, name)));
    }
    const nlohmann::json& main = docs.at("metrics.json");

    const auto fmt4 = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return std::string(buf);
    };
    const auto row_of = [&](const char* key) {
        const auto& m = main.at(key);
        return "| " + std::string(key) + " | " + fmt4(m.at("mean_err").get<double>()) + " | " +
               fmt4(m.at("p95_err").get<double>()) + " | " + fmt4(m.at("tw").get<double>()) +
               " | " + fmt4(m.at("ct").get<double>()) + " |\n";
    };

    std::string md = "# Run summary\n\n";
    md += "Config hash `" + main.at("config_hash").get<std::string>() + "`, seed " +
          std::to_string(main.at("seed").get<std::uint64_t>()) + ".\n\n";
    md += "## Localization on held-out trajectories\n\n";
    md += "| method | mean error (m) | p95 (m) | TW | CT |\n|---|---|---|---|---|\n";
    md += row_of("proposed");
    md += row_of("skf");
    md += row_of("coarse");
    md += "\n## Beam-map reconstruction\n\n";
    md += "| cells | NMSE | RMSE |\n|---|---|---|\n";
    const auto& bm = main.at("beam_map");
    md += "| visited by held-out walks | " + fmt4(bm.at("nmse_held_out").get<double>()) + " | " +
          fmt4(bm.at("rmse_held_out").get<double>()) + " |\n";
    md += "| all | " + fmt4(bm.at("nmse_all").get<double>()) + " | " +
          fmt4(bm.at("rmse_all").get<double>()) + " |\n";
    md += "\n## Beam tracking, capacity ratio vs perfect CSI\n\n";
    md += "| SNR (dB) | segment | proposed | skf |\n|---|---|---|---|\n";
    for (const auto& t : main.at("tracking")) {
        const std::string snr = fmt4(t.at("snr_db").get<double>());
        md += "| " + snr + " | LOS | " + fmt4(t.at("ratio_los").at("proposed").get<double>()) +
              " | " + fmt4(t.at("ratio_los").at("skf").get<double>()) + " |\n";
        md += "| " + snr + " | NLOS | " + fmt4(t.at("ratio_nlos").at("proposed").get<double>()) +
              " | " + fmt4(t.at("ratio_nlos").at("skf").get<double>()) + " |\n";
    }

    // One row per distinct setting across every metrics document present.
    std::map<std::size_t, std::pair<double, double>> by_m, by_n;
    for (const auto& [name, doc] : docs) {
        const auto mean = doc.at("proposed").at("mean_err").get<double>();
        const auto p95 = doc.at("proposed").at("p95_err").get<double>();
        by_m.try_emplace(doc.at("m_per_bs").get<std::size_t>(), mean, p95);
        by_n.try_emplace(doc.at("n_trajectories").get<std::size_t>(), mean, p95);
    }
    std::string m_csv = "m_per_bs,mean_err,p95_err\n";
    for (const auto& [m, e] : by_m) {
        m_csv += std::to_string(m) + ',' + fmt_double(e.first) + ',' + fmt_double(e.second) + '\n';
    }
    std::string n_csv = "n_trajectories,mean_err,p95_err\n";
    for (const auto& [n, e] : by_n) {
        n_csv += std::to_string(n) + ',' + fmt_double(e.first) + ',' + fmt_double(e.second) + '\n';
    }

    ensure_dir(join(dir, "report"));
    util::write_text_file(join(dir, "report/summary.md"), md);
    util::write_text_file(join(dir, "report/error_vs_m.csv"), m_csv);
    util::write_text_file(join(dir, "report/error_vs_trajectories.csv"), n_csv);
}

}  // namespace beammap::cli
