#pragma once

#include <array>
#include <vector>

#include "beammap/nn/graph.hpp"
#include "beammap/nn/layers.hpp"

namespace beammap::enc {

// Sequence encoder: sparse per-step beam measurements -> per-step latent
// rows -> position estimates. The front end mixes beams within a step
// (attention over beam tokens, then over feature-group tokens, each followed
// by a pair of causal/anti-causal convolutions). The temporal stage stacks
// bidirectional recurrent layers whose directions are merged with a
// truncation margin, then compresses each step through a small 2-D
// convolutional head.
struct EncoderConfig {
    std::size_t n_beams = 0;
    std::size_t token_dim = 8;
    std::size_t attn_ffn = 32;
    std::size_t feature_tokens = 8;  // block-2 groups; must divide d_f
    std::size_t d_f = 32;
    std::size_t d_latent = 16;
    std::size_t window_k = 2;    // conv windows span k+1 steps
    std::size_t trunc_eps = 2;   // rows dropped from each end of a direction
    std::vector<std::size_t> rnn_widths = {32, 40, 48};
    std::size_t map_h = 6, map_w = 8;  // rnn_widths.back() == map_h * map_w
    std::size_t cnn_channels = 4;
    std::size_t proj_hidden = 64;
    std::size_t head_hidden = 32;
    std::array<double, 2> center = {0.0, 0.0};  // location head bias init
};

class Encoder {
public:
    explicit Encoder(EncoderConfig cfg);

    void init_params(nn::ParamStore& ps, nn::Rng& rng) const;

    // values/mask both (L, n_beams); mask entries are 0/1. L > max(2k, 2eps).
    nn::Var extract_features(nn::Graph& g, const nn::ParamStore& ps, const nn::Tensor& values,
                             const nn::Tensor& mask) const;

    // (L, d_f) -> (L, d_latent).
    nn::Var encode_temporal(nn::Graph& g, const nn::ParamStore& ps, nn::Var z3) const;

    // (L, d_latent) -> (L, 2). With zero weights the output is the bias row,
    // which init_params sets to cfg.center.
    nn::Var predict_location(nn::Graph& g, const nn::ParamStore& ps, nn::Var zhat) const;

    struct Out {
        nn::Var zhat;
        nn::Var phat;
    };
    Out forward(nn::Graph& g, const nn::ParamStore& ps, const nn::Tensor& values,
                const nn::Tensor& mask) const;

    const EncoderConfig& config() const { return cfg_; }

private:
    EncoderConfig cfg_;

    nn::Var token_block(nn::Graph& g, const nn::ParamStore& ps, const std::string& name,
                        nn::Var tokens, std::size_t groups, std::size_t n_tokens,
                        std::size_t token_feat) const;
    nn::Var dual_window_conv(nn::Graph& g, const nn::ParamStore& ps, const std::string& name,
                             nn::Var x, std::size_t width_ch) const;
};

}  // namespace beammap::enc
