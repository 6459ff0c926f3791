#include "beammap/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace beammap::nn {

void Linear::init(ParamStore& ps, Rng& rng) const {
    ps.create(name + ".w", init_uniform({in, out}, in, rng));
    ps.create(name + ".b", Tensor::zeros({1, out}));
}

Var Linear::operator()(Graph& g, const ParamStore& ps, Var x) const {
    Var w = g.parameter(name + ".w", ps.get(name + ".w"));
    Var b = g.parameter(name + ".b", ps.get(name + ".b"));
    return g.add_rowvec(g.matmul(x, w), b);
}

void Conv1d::init(ParamStore& ps, Rng& rng) const {
    ps.create(name + ".w", init_uniform({width * c_in, c_out}, width * c_in, rng));
    ps.create(name + ".b", Tensor::zeros({1, c_out}));
}

Var Conv1d::operator()(Graph& g, const ParamStore& ps, Var x) const {
    const Tensor& xv = g.value(x);
    if (xv.ndim() != 2 || xv.cols() != c_in) {
        throw std::invalid_argument("Conv1d '" + name + "': expected (L, " + std::to_string(c_in) +
                                    "), got " + xv.shape_str());
    }
    const std::int64_t len = static_cast<std::int64_t>(xv.rows());
    std::vector<std::int64_t> idx;
    idx.reserve(static_cast<std::size_t>(len) * width * c_in);
    for (std::int64_t l = 0; l < len; ++l) {
        for (std::size_t r = 0; r < width; ++r) {
            std::int64_t src = l + offset + static_cast<std::int64_t>(r);
            if (pad == Pad::Clamp) {
                src = std::max<std::int64_t>(0, std::min(src, len - 1));
            } else if (src < 0 || src >= len) {
                src = -1;
            }
            for (std::size_t ci = 0; ci < c_in; ++ci) {
                idx.push_back(src < 0 ? -1 : src * static_cast<std::int64_t>(c_in) +
                                                 static_cast<std::int64_t>(ci));
            }
        }
    }
    Var cols = g.gather(x, std::move(idx), {static_cast<std::size_t>(len), width * c_in});
    Var w = g.parameter(name + ".w", ps.get(name + ".w"));
    Var b = g.parameter(name + ".b", ps.get(name + ".b"));
    return g.add_rowvec(g.matmul(cols, w), b);
}

void Conv2d::init(ParamStore& ps, Rng& rng) const {
    ps.create(name + ".w", init_uniform({9 * c_in, c_out}, 9 * c_in, rng));
    ps.create(name + ".b", Tensor::zeros({1, c_out}));
}

Var Conv2d::operator()(Graph& g, const ParamStore& ps, Var x) const {
    const Tensor& xv = g.value(x);
    if (xv.ndim() != 2 || xv.cols() != h * w * c_in) {
        throw std::invalid_argument("Conv2d '" + name + "': expected (L, " +
                                    std::to_string(h * w * c_in) + "), got " + xv.shape_str());
    }
    const std::size_t len = xv.rows();
    const std::int64_t row_stride = static_cast<std::int64_t>(h * w * c_in);
    std::vector<std::int64_t> idx;
    idx.reserve(len * h * w * 9 * c_in);
    for (std::size_t l = 0; l < len; ++l) {
        const std::int64_t base = static_cast<std::int64_t>(l) * row_stride;
        for (std::size_t py = 0; py < h; ++py) {
            for (std::size_t px = 0; px < w; ++px) {
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const std::int64_t qy = static_cast<std::int64_t>(py) + dy;
                        const std::int64_t qx = static_cast<std::int64_t>(px) + dx;
                        const bool inside = qy >= 0 && qy < static_cast<std::int64_t>(h) &&
                                            qx >= 0 && qx < static_cast<std::int64_t>(w);
                        for (std::size_t ci = 0; ci < c_in; ++ci) {
                            idx.push_back(inside ? base + (qy * static_cast<std::int64_t>(w) + qx) *
                                                              static_cast<std::int64_t>(c_in) +
                                                       static_cast<std::int64_t>(ci)
                                                 : -1);
                        }
                    }
                }
            }
        }
    }
    Var cols = g.gather(x, std::move(idx), {len * h * w, 9 * c_in});
    Var wv = g.parameter(name + ".w", ps.get(name + ".w"));
    Var bv = g.parameter(name + ".b", ps.get(name + ".b"));
    Var out = g.add_rowvec(g.matmul(cols, wv), bv);  // (len*h*w, c_out)
    return g.reshape(out, {len, h * w * c_out});
}

void AttentionBlock::init(ParamStore& ps, Rng& rng) const {
    ps.create(name + ".wq", init_uniform({dim, dim}, dim, rng));
    ps.create(name + ".wk", init_uniform({dim, dim}, dim, rng));
    ps.create(name + ".wv", init_uniform({dim, dim}, dim, rng));
    Linear{name + ".ffn1", dim, ffn}.init(ps, rng);
    Linear{name + ".ffn2", ffn, dim}.init(ps, rng);
}

Var AttentionBlock::operator()(Graph& g, const ParamStore& ps, Var x, std::size_t groups,
                               std::size_t tokens) const {
    const Tensor& xv = g.value(x);
    if (xv.ndim() != 2 || xv.rows() != groups * tokens || xv.cols() != dim) {
        throw std::invalid_argument("AttentionBlock '" + name + "': expected (" +
                                    std::to_string(groups * tokens) + ", " + std::to_string(dim) +
                                    "), got " + xv.shape_str());
    }
    Var wq = g.parameter(name + ".wq", ps.get(name + ".wq"));
    Var wk = g.parameter(name + ".wk", ps.get(name + ".wk"));
    Var wv = g.parameter(name + ".wv", ps.get(name + ".wv"));
    Var q = g.matmul(x, wq);
    Var k = g.matmul(x, wk);
    Var v = g.matmul(x, wv);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(dim));
    std::vector<Var> outs;
    outs.reserve(groups);
    for (std::size_t b = 0; b < groups; ++b) {
        const std::size_t r0 = b * tokens, r1 = r0 + tokens;
        Var qb = g.slice_rows(q, r0, r1);
        Var kb = g.slice_rows(k, r0, r1);
        Var vb = g.slice_rows(v, r0, r1);
        Var attn = g.softmax_rows(g.scale(g.matmul_nt(qb, kb), inv_sqrt_d));
        outs.push_back(g.matmul(attn, vb));
    }
    Var mixed = g.layer_norm_rows(g.add(x, g.concat_rows(outs)));
    Linear ffn1{name + ".ffn1", dim, ffn}, ffn2{name + ".ffn2", ffn, dim};
    Var f = ffn2(g, ps, g.relu(ffn1(g, ps, mixed)));
    return g.layer_norm_rows(g.add(mixed, f));
}

void GruCell::init(ParamStore& ps, Rng& rng) const {
    ps.create(name + ".wx", init_uniform({in, 3 * hidden}, in, rng));
    ps.create(name + ".b", Tensor::zeros({1, 3 * hidden}));
    ps.create(name + ".wh_zr", init_uniform({hidden, 2 * hidden}, hidden, rng));
    ps.create(name + ".wh_n", init_uniform({hidden, hidden}, hidden, rng));
}

Var GruCell::run(Graph& g, const ParamStore& ps, Var seq, bool reverse) const {
    const Tensor& xv = g.value(seq);
    if (xv.ndim() != 2 || xv.cols() != in) {
        throw std::invalid_argument("GruCell '" + name + "': expected (L, " + std::to_string(in) +
                                    "), got " + xv.shape_str());
    }
    const std::size_t len = xv.rows();
    if (len == 0) throw std::invalid_argument("GruCell '" + name + "': empty sequence");
    const std::size_t H = hidden;
    Var wx = g.parameter(name + ".wx", ps.get(name + ".wx"));
    Var b = g.parameter(name + ".b", ps.get(name + ".b"));
    Var wh_zr = g.parameter(name + ".wh_zr", ps.get(name + ".wh_zr"));
    Var wh_n = g.parameter(name + ".wh_n", ps.get(name + ".wh_n"));
    Var bx = g.add_rowvec(g.matmul(seq, wx), b);  // (L, 3H), precomputed once
    Var hprev = g.constant(Tensor::zeros({1, H}));
    std::vector<Var> states;
    states.reserve(len);
    for (std::size_t step = 0; step < len; ++step) {
        const std::size_t l = reverse ? len - 1 - step : step;
        Var row = g.slice_rows(bx, l, l + 1);
        Var zr = g.sigmoid(g.add(g.slice_cols(row, 0, 2 * H), g.matmul(hprev, wh_zr)));
        Var z = g.slice_cols(zr, 0, H);
        Var rr = g.slice_cols(zr, H, 2 * H);
        Var n = g.tanh_(g.add(g.slice_cols(row, 2 * H, 3 * H), g.matmul(g.mul(rr, hprev), wh_n)));
        hprev = g.add(hprev, g.mul(z, g.sub(n, hprev)));
        states.push_back(hprev);
    }
    Var out = g.concat_rows(states);
    if (reverse) {
        std::vector<std::size_t> flip(len);
        for (std::size_t i = 0; i < len; ++i) flip[i] = len - 1 - i;
        out = g.gather_rows(out, flip);
    }
    return out;
}

Var bidir_merge(Graph& g, Var fwd, Var bwd, std::size_t eps) {
    require_same_shape(g.value(fwd), g.value(bwd), "bidir_merge");
    const std::size_t len = g.value(fwd).rows();
    if (len <= 2 * eps) {
        throw std::invalid_argument("bidir_merge: sequence length " + std::to_string(len) +
                                    " requires length > 2*eps = " + std::to_string(2 * eps));
    }
    Var mid = g.scale(g.add(g.slice_rows(fwd, eps, len - eps), g.slice_rows(bwd, eps, len - eps)), 0.5);
    if (eps == 0) return mid;
    std::vector<Var> parts{g.slice_rows(bwd, 0, eps), mid, g.slice_rows(fwd, len - eps, len)};
    return g.concat_rows(parts);
}

}  // namespace beammap::nn
