#include "beammap/cli/config.hpp"

#include <set>
#include <stdexcept>

#include "beammap/util/io.hpp"

namespace beammap::cli {

namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                const char* section) {
    if (!j.is_object()) {
        throw std::invalid_argument(std::string("config: section '") + section +
                                    "' must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) {
            throw std::invalid_argument(std::string("config: unknown key '") + key +
                                        "' in section '" + section + "'");
        }
    }
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void validate(const ExperimentConfig& c) {
    const auto fail = [](const std::string& msg) {
        throw std::invalid_argument("config: " + msg);
    };
    if (c.array.n_antennas == 0) fail("n_antennas must be positive");
    if (c.array.element_spacing <= 0.0) fail("element_spacing must be positive");
    if (c.grid_resolution <= 0.0) fail("grid_resolution must be positive");
    if (c.data.m_observed == 0 || c.data.m_observed > c.array.n_antennas) {
        fail("m_per_bs must lie in [1, n_antennas]");
    }
    if (c.data.dt <= 0.0 || c.data.duration < c.data.dt) fail("need duration >= dt > 0");
    if (c.data.n_traj < 3) fail("need at least 3 trajectories for a train/val/test split");
    if (c.model.d_f == 0 || c.model.d_f % 2 != 0) fail("d_f must be positive and even");
    if (c.model.feature_tokens == 0 || c.model.d_f % c.model.feature_tokens != 0) {
        fail("feature_tokens must divide d_f");
    }
    if (c.model.rnn_widths.empty()) fail("rnn_widths must be nonempty");
    for (std::size_t w : c.model.rnn_widths) {
        if (w == 0 || w % 2 != 0) fail("rnn widths must be positive and even");
    }
    if (c.model.rnn_widths.back() != c.model.map_h * c.model.map_w) {
        fail("rnn_widths must end at map_h * map_w");
    }
    if (c.model.d_latent == 0) fail("d_latent must be positive");
    if (c.model.alpha <= 0.0) fail("alpha must be positive");
    if (c.model.ema_decay <= 0.0 || c.model.ema_decay >= 1.0) fail("ema_decay must lie in (0, 1)");
    if (c.model.ema_zeta <= 0.0) fail("ema_zeta must be positive");
    if (c.model.diffusion_steps < 2) fail("diffusion_steps must be at least 2");
    if (!(c.model.eta_min > 0.0 && c.model.eta_min < c.model.eta_max && c.model.eta_max < 1.0)) {
        fail("need 0 < eta_min < eta_max < 1");
    }
    if (c.model.time_dim == 0 || c.model.time_dim % 2 != 0) fail("time_dim must be even");
    if (c.model.map_samples == 0) fail("map_samples must be positive");
    if (c.training.epochs == 0) fail("epochs must be positive");
    if (c.training.batch == 0) fail("batch must be positive");
    if (c.training.lr <= 0.0) fail("lr must be positive");
    if (c.training.weights.lambda_c < 0.0 || c.training.weights.lambda_t < 0.0 ||
        c.training.weights.lambda_d < 0.0) {
        fail("loss weights must be nonnegative");
    }
    if (c.training.coherence_window <= 0.0) fail("coherence_window must be positive");
    if (c.training.val_fraction < 0.0 || c.training.test_fraction <= 0.0 ||
        c.training.val_fraction + c.training.test_fraction >= 1.0) {
        fail("need test_fraction > 0, val_fraction >= 0, and their sum below 1");
    }
    // Sequence-length floor shared by the conv windows and truncation merge.
    const std::size_t steps = static_cast<std::size_t>(c.data.duration / c.data.dt) + 1;
    if (steps < 2 * c.model.window_k + 1 || steps <= 2 * c.model.trunc_eps || steps < 5) {
        fail("trajectories too short for window_k / trunc_eps");
    }
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
    array.n_antennas = 8;
    array.element_spacing = 0.5;
    env = sim::make_env(
        {0.0, 0.0, 100.0, 100.0},
        {{5.0, 5.0}, {95.0, 10.0}, {50.0, 95.0}},
        {{{30.0, 20.0}, {30.0, 60.0}, 0.6}, {{60.0, 45.0}, {90.0, 45.0}, 0.6}});
    data.n_traj = 50;
    data.duration = 199.0;
    data.dt = 1.0;
    data.m_observed = 2;
    data.sigma2_coarse = 400.0;
    data.noise_sigma = 0.0;
    data.profile.initial_speed = 1.0;
    data.profile.heading_wander_std = 0.35;
    data.profile.segments = {sim::SpeedSegment::constant(1.0, data.duration)};
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json world = sim::env_to_json(c.env);
    world["n_antennas"] = c.array.n_antennas;
    world["element_spacing"] = c.array.element_spacing;
    world["grid_resolution"] = c.grid_resolution;

    nlohmann::json data{{"n_trajectories", c.data.n_traj},
                        {"duration", c.data.duration},
                        {"dt", c.data.dt},
                        {"m_per_bs", c.data.m_observed},
                        {"coarse_sigma2", c.data.sigma2_coarse},
                        {"noise_sigma", c.data.noise_sigma},
                        {"profile", sim::profile_to_json(c.data.profile)}};

    nlohmann::json model{{"token_dim", c.model.token_dim},
                         {"attn_ffn", c.model.attn_ffn},
                         {"feature_tokens", c.model.feature_tokens},
                         {"d_f", c.model.d_f},
                         {"d_latent", c.model.d_latent},
                         {"window_k", c.model.window_k},
                         {"trunc_eps", c.model.trunc_eps},
                         {"rnn_widths", c.model.rnn_widths},
                         {"map_h", c.model.map_h},
                         {"map_w", c.model.map_w},
                         {"cnn_channels", c.model.cnn_channels},
                         {"proj_hidden", c.model.proj_hidden},
                         {"head_hidden", c.model.head_hidden},
                         {"alpha", c.model.alpha},
                         {"ema_decay", c.model.ema_decay},
                         {"ema_zeta", c.model.ema_zeta},
                         {"diffusion_steps", c.model.diffusion_steps},
                         {"eta_min", c.model.eta_min},
                         {"eta_max", c.model.eta_max},
                         {"denoiser_width", c.model.denoiser_width},
                         {"denoiser_layers", c.model.denoiser_layers},
                         {"time_dim", c.model.time_dim},
                         {"map_samples", c.model.map_samples}};

    nlohmann::json training{{"epochs", c.training.epochs},
                            {"batch", c.training.batch},
                            {"lr", c.training.lr},
                            {"lambda_c", c.training.weights.lambda_c},
                            {"lambda_t", c.training.weights.lambda_t},
                            {"lambda_d", c.training.weights.lambda_d},
                            {"triplet_margin", c.training.triplet_margin},
                            {"coherence_window", c.training.coherence_window},
                            {"max_triplets", c.training.max_triplets},
                            {"val_fraction", c.training.val_fraction},
                            {"test_fraction", c.training.test_fraction},
                            {"seed", c.training.seed}};

    return {{"world", std::move(world)},
            {"data", std::move(data)},
            {"model", std::move(model)},
            {"training", std::move(training)}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    check_keys(j, {"world", "data", "model", "training"}, "top level");
    ExperimentConfig c;

    if (j.contains("world")) {
        const auto& w = j.at("world");
        check_keys(w,
                   {"n_antennas", "element_spacing", "bounds", "bs_positions", "walls",
                    "grid_resolution"},
                   "world");
        maybe(w, "n_antennas", c.array.n_antennas);
        maybe(w, "element_spacing", c.array.element_spacing);
        maybe(w, "grid_resolution", c.grid_resolution);
        if (w.contains("bounds") || w.contains("bs_positions") || w.contains("walls")) {
            // Geometry keys travel together; fill gaps from the default world.
            nlohmann::json geo = sim::env_to_json(c.env);
            for (const char* key : {"bounds", "bs_positions", "walls"}) {
                if (w.contains(key)) geo[key] = w.at(key);
            }
            c.env = sim::env_from_json(geo);
        }
    }
    if (j.contains("data")) {
        const auto& d = j.at("data");
        check_keys(d,
                   {"n_trajectories", "duration", "dt", "m_per_bs", "coarse_sigma2", "noise_sigma",
                    "profile"},
                   "data");
        maybe(d, "n_trajectories", c.data.n_traj);
        maybe(d, "duration", c.data.duration);
        maybe(d, "dt", c.data.dt);
        maybe(d, "m_per_bs", c.data.m_observed);
        maybe(d, "coarse_sigma2", c.data.sigma2_coarse);
        maybe(d, "noise_sigma", c.data.noise_sigma);
        if (d.contains("profile")) {
            check_keys(d.at("profile"), {"initial_speed", "heading_wander_std", "segments"},
                       "data.profile");
            c.data.profile = sim::profile_from_json(d.at("profile"));
        }
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        check_keys(m,
                   {"token_dim", "attn_ffn", "feature_tokens", "d_f", "d_latent", "window_k",
                    "trunc_eps", "rnn_widths", "map_h", "map_w", "cnn_channels", "proj_hidden",
                    "head_hidden", "alpha", "ema_decay", "ema_zeta", "diffusion_steps", "eta_min",
                    "eta_max", "denoiser_width", "denoiser_layers", "time_dim", "map_samples"},
                   "model");
        maybe(m, "token_dim", c.model.token_dim);
        maybe(m, "attn_ffn", c.model.attn_ffn);
        maybe(m, "feature_tokens", c.model.feature_tokens);
        maybe(m, "d_f", c.model.d_f);
        maybe(m, "d_latent", c.model.d_latent);
        maybe(m, "window_k", c.model.window_k);
        maybe(m, "trunc_eps", c.model.trunc_eps);
        maybe(m, "rnn_widths", c.model.rnn_widths);
        maybe(m, "map_h", c.model.map_h);
        maybe(m, "map_w", c.model.map_w);
        maybe(m, "cnn_channels", c.model.cnn_channels);
        maybe(m, "proj_hidden", c.model.proj_hidden);
        maybe(m, "head_hidden", c.model.head_hidden);
        maybe(m, "alpha", c.model.alpha);
        maybe(m, "ema_decay", c.model.ema_decay);
        maybe(m, "ema_zeta", c.model.ema_zeta);
        maybe(m, "diffusion_steps", c.model.diffusion_steps);
        maybe(m, "eta_min", c.model.eta_min);
        maybe(m, "eta_max", c.model.eta_max);
        maybe(m, "denoiser_width", c.model.denoiser_width);
        maybe(m, "denoiser_layers", c.model.denoiser_layers);
        maybe(m, "time_dim", c.model.time_dim);
        maybe(m, "map_samples", c.model.map_samples);
    }
    if (j.contains("training")) {
        const auto& t = j.at("training");
        check_keys(t,
                   {"epochs", "batch", "lr", "lambda_c", "lambda_t", "lambda_d", "triplet_margin",
                    "coherence_window", "max_triplets", "val_fraction", "test_fraction", "seed"},
                   "training");
        maybe(t, "epochs", c.training.epochs);
        maybe(t, "batch", c.training.batch);
        maybe(t, "lr", c.training.lr);
        maybe(t, "lambda_c", c.training.weights.lambda_c);
        maybe(t, "lambda_t", c.training.weights.lambda_t);
        maybe(t, "lambda_d", c.training.weights.lambda_d);
        maybe(t, "triplet_margin", c.training.triplet_margin);
        maybe(t, "coherence_window", c.training.coherence_window);
        maybe(t, "max_triplets", c.training.max_triplets);
        maybe(t, "val_fraction", c.training.val_fraction);
        maybe(t, "test_fraction", c.training.test_fraction);
        maybe(t, "seed", c.training.seed);
    }

    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    return config_from_json(nlohmann::json::parse(util::read_text_file(path)));
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string dump = config_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

std::size_t n_beams(const ExperimentConfig& cfg) {
    return cfg.env.bs_positions.size() * cfg.array.n_antennas;
}

rm::GridMap make_grid(const ExperimentConfig& cfg) {
    return rm::GridMap::cover(cfg.env.bounds, cfg.grid_resolution);
}

enc::EncoderConfig encoder_config(const ExperimentConfig& cfg) {
    enc::EncoderConfig e;
    e.n_beams = n_beams(cfg);
    e.token_dim = cfg.model.token_dim;
    e.attn_ffn = cfg.model.attn_ffn;
    e.feature_tokens = cfg.model.feature_tokens;
    e.d_f = cfg.model.d_f;
    e.d_latent = cfg.model.d_latent;
    e.window_k = cfg.model.window_k;
    e.trunc_eps = cfg.model.trunc_eps;
    e.rnn_widths = cfg.model.rnn_widths;
    e.map_h = cfg.model.map_h;
    e.map_w = cfg.model.map_w;
    e.cnn_channels = cfg.model.cnn_channels;
    e.proj_hidden = cfg.model.proj_hidden;
    e.head_hidden = cfg.model.head_hidden;
    e.center = {0.5 * (cfg.env.bounds.xmin + cfg.env.bounds.xmax),
                0.5 * (cfg.env.bounds.ymin + cfg.env.bounds.ymax)};
    return e;
}

diff::DenoiserConfig denoiser_config(const ExperimentConfig& cfg) {
    diff::DenoiserConfig d;
    d.g_dim = n_beams(cfg);
    d.cond_dim = cfg.model.d_latent;
    d.width = cfg.model.denoiser_width;
    d.hidden_layers = cfg.model.denoiser_layers;
    d.time_dim = cfg.model.time_dim;
    return d;
}

}  // namespace beammap::cli
