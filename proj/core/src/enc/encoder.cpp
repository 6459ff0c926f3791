#include "beammap/enc/encoder.hpp"

#include <stdexcept>

namespace beammap::enc {

using nn::Conv1d;
using nn::Conv2d;
using nn::GruCell;
using nn::Linear;
using nn::Pad;
using nn::Var;

Encoder::Encoder(EncoderConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.n_beams == 0) throw std::invalid_argument("Encoder: n_beams must be positive");
    if (cfg_.feature_tokens == 0 || cfg_.d_f % cfg_.feature_tokens != 0) {
        throw std::invalid_argument("Encoder: feature_tokens must divide d_f");
    }
    if (cfg_.d_f % 2 != 0) throw std::invalid_argument("Encoder: d_f must be even");
    if (cfg_.rnn_widths.empty()) throw std::invalid_argument("Encoder: empty rnn_widths");
    for (std::size_t w : cfg_.rnn_widths) {
        if (w == 0 || w % 2 != 0) throw std::invalid_argument("Encoder: rnn widths must be even");
    }
    if (cfg_.rnn_widths.back() != cfg_.map_h * cfg_.map_w) {
        throw std::invalid_argument("Encoder: last rnn width must equal map_h*map_w");
    }
    if (cfg_.d_latent == 0) throw std::invalid_argument("Encoder: d_latent must be positive");
}

void Encoder::init_params(nn::ParamStore& ps, nn::Rng& rng) const {
    const std::size_t td = cfg_.token_dim, df = cfg_.d_f, k = cfg_.window_k;

    Linear{"enc.b1.embed", 2, td}.init(ps, rng);
    ps.create("enc.b1.pos", nn::init_uniform({cfg_.n_beams, td}, td, rng));
    nn::AttentionBlock{"enc.b1.attn", td, cfg_.attn_ffn}.init(ps, rng);
    Linear{"enc.b1.fuse", cfg_.n_beams * td, df}.init(ps, rng);
    Conv1d{"enc.b1.convc", k + 1, df, df / 2, -static_cast<int>(k), Pad::Clamp}.init(ps, rng);
    Conv1d{"enc.b1.conva", k + 1, df, df / 2, 0, Pad::Clamp}.init(ps, rng);
    Linear{"enc.b1.cfuse", df, df}.init(ps, rng);

    const std::size_t tf = cfg_.d_f / cfg_.feature_tokens;
    Linear{"enc.b2.embed", tf, td}.init(ps, rng);
    ps.create("enc.b2.pos", nn::init_uniform({cfg_.feature_tokens, td}, td, rng));
    nn::AttentionBlock{"enc.b2.attn", td, cfg_.attn_ffn}.init(ps, rng);
    Linear{"enc.b2.fuse", cfg_.feature_tokens * td, df}.init(ps, rng);
    Conv1d{"enc.b2.convc", k + 1, df, df / 2, -static_cast<int>(k), Pad::Clamp}.init(ps, rng);
    Conv1d{"enc.b2.conva", k + 1, df, df / 2, 0, Pad::Clamp}.init(ps, rng);
    Linear{"enc.b2.cfuse", df, df}.init(ps, rng);

    Linear{"enc.ff1", df, df}.init(ps, rng);

    Conv1d{"enc.ms1", 1, df, df, 0, Pad::Clamp}.init(ps, rng);
    Conv1d{"enc.ms3", 3, df, df, -1, Pad::Clamp}.init(ps, rng);
    Conv1d{"enc.ms5", 5, df, df, -2, Pad::Clamp}.init(ps, rng);

    std::size_t in = 4 * df;
    for (std::size_t i = 0; i < cfg_.rnn_widths.size(); ++i) {
        const std::size_t H = cfg_.rnn_widths[i];
        const std::string base = "enc.rnn" + std::to_string(i);
        GruCell{base + ".fwd", in, H}.init(ps, rng);
        GruCell{base + ".bwd", in, H}.init(ps, rng);
        Conv1d{base + ".convc", k + 1, H, H / 2, -static_cast<int>(k), Pad::Clamp}.init(ps, rng);
        Conv1d{base + ".conva", k + 1, H, H / 2, 0, Pad::Clamp}.init(ps, rng);
        Linear{base + ".cfuse", H, H}.init(ps, rng);
        in = H;
    }

    Conv2d{"enc.cnn1", cfg_.map_h, cfg_.map_w, 1, cfg_.cnn_channels}.init(ps, rng);
    Conv2d{"enc.cnn2", cfg_.map_h, cfg_.map_w, cfg_.cnn_channels, cfg_.cnn_channels}.init(ps, rng);
    Linear{"enc.proj1", cfg_.map_h * cfg_.map_w * cfg_.cnn_channels, cfg_.proj_hidden}.init(ps, rng);
    Linear{"enc.proj2", cfg_.proj_hidden, cfg_.d_latent}.init(ps, rng);

    Linear{"enc.loc1", cfg_.d_latent, cfg_.head_hidden}.init(ps, rng);
    Linear{"enc.loc2", cfg_.head_hidden, 2}.init(ps, rng);
    nn::Tensor& bias = ps.get("enc.loc2.b");
    bias[0] = cfg_.center[0];
    bias[1] = cfg_.center[1];
}

Var Encoder::token_block(nn::Graph& g, const nn::ParamStore& ps, const std::string& name,
                         Var tokens, std::size_t groups, std::size_t n_tokens,
                         std::size_t token_feat) const {
    Var emb = Linear{name + ".embed", token_feat, cfg_.token_dim}(g, ps, tokens);
    // One learned row per token position, repeated across steps.
    Var pos = g.parameter(name + ".pos", ps.get(name + ".pos"));
    std::vector<std::size_t> tile(groups * n_tokens);
    for (std::size_t i = 0; i < tile.size(); ++i) tile[i] = i % n_tokens;
    emb = g.add(emb, g.gather_rows(pos, tile));
    Var mixed = nn::AttentionBlock{name + ".attn", cfg_.token_dim, cfg_.attn_ffn}(
        g, ps, emb, groups, n_tokens);
    Var flat = g.reshape(mixed, {groups, n_tokens * cfg_.token_dim});
    return g.tanh_(Linear{name + ".fuse", n_tokens * cfg_.token_dim, cfg_.d_f}(g, ps, flat));
}

Var Encoder::dual_window_conv(nn::Graph& g, const nn::ParamStore& ps, const std::string& name,
                              Var x, std::size_t width_ch) const {
    const std::size_t k = cfg_.window_k;
    Var past = Conv1d{name + ".convc", k + 1, width_ch, width_ch / 2, -static_cast<int>(k),
                      Pad::Clamp}(g, ps, x);
    Var future = Conv1d{name + ".conva", k + 1, width_ch, width_ch / 2, 0, Pad::Clamp}(g, ps, x);
    Var both = g.concat_cols({past, future});
    return g.tanh_(Linear{name + ".cfuse", width_ch, width_ch}(g, ps, both));
}

Var Encoder::extract_features(nn::Graph& g, const nn::ParamStore& ps, const nn::Tensor& values,
                              const nn::Tensor& mask) const {
    nn::require_same_shape(values, mask, "Encoder::extract_features");
    if (values.ndim() != 2 || values.cols() != cfg_.n_beams) {
        throw std::invalid_argument("Encoder::extract_features: expected (L, " +
                                    std::to_string(cfg_.n_beams) + "), got " + values.shape_str());
    }
    const std::size_t L = values.rows();
    if (L < 2 * cfg_.window_k + 1) {
        throw std::invalid_argument("Encoder::extract_features: sequence length " +
                                    std::to_string(L) + " shorter than conv window " +
                                    std::to_string(2 * cfg_.window_k + 1));
    }

    // Beam tokens: one (value, mask) pair per beam per step.
    nn::Tensor tok({L * cfg_.n_beams, 2});
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t b = 0; b < cfg_.n_beams; ++b) {
            tok[(l * cfg_.n_beams + b) * 2] = values.at(l, b);
            tok[(l * cfg_.n_beams + b) * 2 + 1] = mask.at(l, b);
        }
    }
    Var fused1 = token_block(g, ps, "enc.b1", g.constant(std::move(tok)), L, cfg_.n_beams, 2);
    Var z1 = dual_window_conv(g, ps, "enc.b1", fused1, cfg_.d_f);

    // Feature-group tokens over the per-step feature rows.
    const std::size_t tf = cfg_.d_f / cfg_.feature_tokens;
    Var tokens2 = g.reshape(z1, {L * cfg_.feature_tokens, tf});
    Var fused2 = token_block(g, ps, "enc.b2", tokens2, L, cfg_.feature_tokens, tf);
    Var z2 = dual_window_conv(g, ps, "enc.b2", fused2, cfg_.d_f);

    return g.tanh_(Linear{"enc.ff1", cfg_.d_f, cfg_.d_f}(g, ps, z2));
}

Var Encoder::encode_temporal(nn::Graph& g, const nn::ParamStore& ps, Var z3) const {
    const nn::Tensor& zv = g.value(z3);
    if (zv.ndim() != 2 || zv.cols() != cfg_.d_f) {
        throw std::invalid_argument("Encoder::encode_temporal: expected (L, " +
                                    std::to_string(cfg_.d_f) + "), got " + zv.shape_str());
    }
    const std::size_t L = zv.rows(), df = cfg_.d_f;
    if (L <= 2 * cfg_.trunc_eps || L < 5) {
        throw std::invalid_argument("Encoder::encode_temporal: sequence too short for eps=" +
                                    std::to_string(cfg_.trunc_eps));
    }

    Var c1 = g.tanh_(Conv1d{"enc.ms1", 1, df, df, 0, Pad::Clamp}(g, ps, z3));
    Var c3 = g.tanh_(Conv1d{"enc.ms3", 3, df, df, -1, Pad::Clamp}(g, ps, z3));
    Var c5 = g.tanh_(Conv1d{"enc.ms5", 5, df, df, -2, Pad::Clamp}(g, ps, z3));
    Var x = g.concat_cols({z3, c1, c3, c5});

    std::size_t in = 4 * df;
    for (std::size_t i = 0; i < cfg_.rnn_widths.size(); ++i) {
        const std::size_t H = cfg_.rnn_widths[i];
        const std::string base = "enc.rnn" + std::to_string(i);
        Var fwd = GruCell{base + ".fwd", in, H}.run(g, ps, x, false);
        Var bwd = GruCell{base + ".bwd", in, H}.run(g, ps, x, true);
        Var merged = nn::bidir_merge(g, fwd, bwd, cfg_.trunc_eps);
        x = dual_window_conv(g, ps, base, merged, H);
        in = H;
    }

    // Each step's feature row viewed as a small 2-D map.
    Var m1 = g.relu(Conv2d{"enc.cnn1", cfg_.map_h, cfg_.map_w, 1, cfg_.cnn_channels}(g, ps, x));
    Var m2 = g.relu(
        Conv2d{"enc.cnn2", cfg_.map_h, cfg_.map_w, cfg_.cnn_channels, cfg_.cnn_channels}(g, ps, m1));
    Var p1 = g.tanh_(Linear{"enc.proj1", cfg_.map_h * cfg_.map_w * cfg_.cnn_channels,
                            cfg_.proj_hidden}(g, ps, m2));
    return Linear{"enc.proj2", cfg_.proj_hidden, cfg_.d_latent}(g, ps, p1);
}

Var Encoder::predict_location(nn::Graph& g, const nn::ParamStore& ps, Var zhat) const {
    const nn::Tensor& zv = g.value(zhat);
    if (zv.ndim() != 2 || zv.cols() != cfg_.d_latent) {
        throw std::invalid_argument("Encoder::predict_location: expected (L, " +
                                    std::to_string(cfg_.d_latent) + "), got " + zv.shape_str());
    }
    Var h = g.tanh_(Linear{"enc.loc1", cfg_.d_latent, cfg_.head_hidden}(g, ps, zhat));
    return Linear{"enc.loc2", cfg_.head_hidden, 2}(g, ps, h);
}

Encoder::Out Encoder::forward(nn::Graph& g, const nn::ParamStore& ps, const nn::Tensor& values,
                              const nn::Tensor& mask) const {
    Var z3 = extract_features(g, ps, values, mask);
    Var zhat = encode_temporal(g, ps, z3);
    Var phat = predict_location(g, ps, zhat);
    return {zhat, phat};
}

}  // namespace beammap::enc
