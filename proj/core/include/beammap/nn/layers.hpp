#pragma once

#include <string>

#include "beammap/nn/graph.hpp"
#include "beammap/nn/params.hpp"
#include "beammap/nn/rng.hpp"

namespace beammap::nn {

// Affine layer over row vectors: y = x W + b, with parameters "<name>.w"
// of shape (in, out) and "<name>.b" of shape (1, out).
struct Linear {
    std::string name;
    std::size_t in = 0, out = 0;

    void init(ParamStore& ps, Rng& rng) const;
    Var operator()(Graph& g, const ParamStore& ps, Var x) const;
};

enum class Pad { Zero, Clamp };

// 1-D convolution along the row (time) axis. Input (L, c_in); output row l
// sees input rows [l+offset, l+offset+width). Kernel "<name>.w" has shape
// (width*c_in, c_out), row index r*c_in+ci = window position r, channel ci.
struct Conv1d {
    std::string name;
    std::size_t width = 1, c_in = 0, c_out = 0;
    int offset = 0;
    Pad pad = Pad::Clamp;

    void init(ParamStore& ps, Rng& rng) const;
    Var operator()(Graph& g, const ParamStore& ps, Var x) const;
};

// 3x3 same-padded 2-D convolution applied independently to every sequence
// row. Each row of x is read as an (h, w) map with c_in channels, channel
// index fastest. Zero padding at the map border.
struct Conv2d {
    std::string name;
    std::size_t h = 0, w = 0, c_in = 0, c_out = 0;

    void init(ParamStore& ps, Rng& rng) const;
    Var operator()(Graph& g, const ParamStore& ps, Var x) const;
};

// Pre-projection single-head self-attention with residual + layer norm and a
// feedforward sublayer, applied independently to each contiguous block of
// `tokens` rows. Input (groups*tokens, dim).
struct AttentionBlock {
    std::string name;
    std::size_t dim = 0, ffn = 0;

    void init(ParamStore& ps, Rng& rng) const;
    Var operator()(Graph& g, const ParamStore& ps, Var x, std::size_t groups, std::size_t tokens) const;
};

// Gated recurrent cell. Gate order [update z, reset r], candidate n:
//   h' = h + z * (n - h)
// Parameters: "<name>.wx" (in, 3H), "<name>.b" (1, 3H), "<name>.wh_zr"
// (H, 2H), "<name>.wh_n" (H, H). `reverse` runs right to left; output row i
// always corresponds to input row i.
struct GruCell {
    std::string name;
    std::size_t in = 0, hidden = 0;

    void init(ParamStore& ps, Rng& rng) const;
    Var run(Graph& g, const ParamStore& ps, Var seq, bool reverse) const;
};

// Combines forward and backward recurrent outputs (L, H) each. The first
// `eps` rows take the backward pass only (the forward state is still in its
// warm-up transient there), the last `eps` rows take the forward pass only,
// and the middle averages the two. Requires L > 2*eps.
Var bidir_merge(Graph& g, Var fwd, Var bwd, std::size_t eps);

}  // namespace beammap::nn
