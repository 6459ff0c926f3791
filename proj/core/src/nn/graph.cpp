#include "beammap/nn/graph.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace beammap::nn {

namespace {

void add_into(Tensor& dst, const Tensor& src) {
    auto& d = dst.data();
    const auto& s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

void sub_into(Tensor& dst, const Tensor& src) {
    auto& d = dst.data();
    const auto& s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= s[i];
}

void mul_add_into(Tensor& dst, const Tensor& x, const Tensor& y) {
    auto& d = dst.data();
    const auto& a = x.data();
    const auto& b = y.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += a[i] * b[i];
}

// C += A * B. Row-major ikj loop: each output row accumulates independently,
// so batched evaluation matches per-row evaluation bit for bit.
void matmul_nn_acc(const Tensor& A, const Tensor& B, Tensor& C) {
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    const auto& a = A.data();
    const auto& b = B.data();
    auto& c = C.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            const double* brow = &b[p * n];
            double* crow = &c[i * n];
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C += A * B^T, A (m,k), B (n,k).
void matmul_nt_acc(const Tensor& A, const Tensor& B, Tensor& C) {
    const std::size_t m = A.rows(), k = A.cols(), n = B.rows();
    const auto& a = A.data();
    const auto& b = B.data();
    auto& c = C.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            const double* arow = &a[i * k];
            const double* brow = &b[j * k];
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            c[i * n + j] += acc;
        }
    }
}

// C += A^T * B, A (m,k), B (m,n), C (k,n).
void matmul_tn_acc(const Tensor& A, const Tensor& B, Tensor& C) {
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    const auto& a = A.data();
    const auto& b = B.data();
    auto& c = C.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            const double* brow = &b[i * n];
            double* crow = &c[p * n];
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void require_rank2(const Tensor& t, const char* op) {
    if (t.ndim() != 2) {
        throw std::invalid_argument(std::string(op) + ": expected rank-2 tensor, got shape " +
                                    t.shape_str());
    }
}

}  // namespace

Var Graph::push(Tensor value, bool is_tracked) {
    if (ran_backward_) throw std::logic_error("Graph: cannot extend a graph after backward()");
    Node n;
    n.value = std::move(value);
    n.tracked = is_tracked;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::constant(Tensor t) { return push(std::move(t), false); }

Var Graph::leaf(Tensor t) { return push(std::move(t), true); }

Var Graph::parameter(const std::string& name, const Tensor& value) {
    auto it = params_.find(name);
    if (it != params_.end()) {
        if (!nodes_[it->second].value.same_shape(value)) {
            throw std::invalid_argument("Graph::parameter: shape changed for '" + name + "'");
        }
        return Var{it->second};
    }
    Var v = push(value, true);
    params_[name] = v.id;
    return v;
}

Var Graph::add(Var a, Var b) {
    require_same_shape(value(a), value(b), "add");
    Tensor out = value(a);
    add_into(out, value(b));
    bool tr = tracked(a) || tracked(b);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [a, b, r](Graph& g) {
            const Tensor& gr = g.nodes_[r.id].grad;
            if (g.tracked(a)) add_into(g.grad_ref(a), gr);
            if (g.tracked(b)) add_into(g.grad_ref(b), gr);
        };
    }
    return r;
}

Var Graph::sub(Var a, Var b) {
    require_same_shape(value(a), value(b), "sub");
    Tensor out = value(a);
    sub_into(out, value(b));
    bool tr = tracked(a) || tracked(b);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [a, b, r](Graph& g) {
            const Tensor& gr = g.nodes_[r.id].grad;
            if (g.tracked(a)) add_into(g.grad_ref(a), gr);
            if (g.tracked(b)) sub_into(g.grad_ref(b), gr);
        };
    }
    return r;
}

Var Graph::mul(Var a, Var b) {
    require_same_shape(value(a), value(b), "mul");
    Tensor out(value(a).shape());
    {
        auto& o = out.data();
        const auto& x = value(a).data();
        const auto& y = value(b).data();
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
    }
    bool tr = tracked(a) || tracked(b);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [a, b, r](Graph& g) {
            const Tensor& gr = g.nodes_[r.id].grad;
            if (g.tracked(a)) mul_add_into(g.grad_ref(a), gr, g.value(b));
            if (g.tracked(b)) mul_add_into(g.grad_ref(b), gr, g.value(a));
        };
    }
    return r;
}

Var Graph::div(Var a, Var b) {
    require_same_shape(value(a), value(b), "div");
    const auto& y = value(b).data();
    for (double v : y)
        if (v == 0.0) throw std::domain_error("div: zero divisor");
    Tensor out(value(a).shape());
    {
        auto& o = out.data();
        const auto& x = value(a).data();
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] / y[i];
    }
    bool tr = tracked(a) || tracked(b);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [a, b, r](Graph& g) {
            const Tensor& gr = g.nodes_[r.id].grad;
            const auto& bv = g.value(b).data();
            const auto& ov = g.value(r).data();
            if (g.tracked(a)) {
                auto& da = g.grad_ref(a).data();
                for (std::size_t i = 0; i < da.size(); ++i) da[i] += gr.data()[i] / bv[i];
            }
            if (g.tracked(b)) {
                auto& db = g.grad_ref(b).data();
                for (std::size_t i = 0; i < db.size(); ++i)
                    db[i] -= gr.data()[i] * ov[i] / bv[i];
            }
        };
    }
    return r;
}

Var Graph::scale(Var a, double c) {
    Tensor out = value(a);
    for (double& v : out.data()) v *= c;
    bool tr = tracked(a);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [a, r, c](Graph& g) {
            const auto& gr = g.nodes_[r.id].grad.data();
            auto& da = g.grad_ref(a).data();
            for (std::size_t i = 0; i < da.size(); ++i) da[i] += c * gr[i];
        };
    }
    return r;
}

Var Graph::add_scalar(Var a, double c) {
    Tensor out = value(a);
    for (double& v : out.data()) v += c;
    bool tr = tracked(a);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [a, r](Graph& g) {
            if (g.tracked(a)) add_into(g.grad_ref(a), g.nodes_[r.id].grad);
        };
    }
    return r;
}

Var Graph::matmul(Var a, Var b) {
    require_rank2(value(a), "matmul");
    require_rank2(value(b), "matmul");
    if (value(a).cols() != value(b).rows()) {
        throw std::invalid_argument("matmul: inner dimension mismatch " + value(a).shape_str() +
                                    " x " + value(b).shape_str());
    }
    Tensor out = Tensor::zeros({value(a).rows(), value(b).cols()});
    matmul_nn_acc(value(a), value(b), out);
    bool tr = tracked(a) || tracked(b);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [a, b, r](Graph& g) {
            const Tensor& gr = g.nodes_[r.id].grad;
            if (g.tracked(a)) matmul_nt_acc(gr, g.value(b), g.grad_ref(a));
            if (g.tracked(b)) matmul_tn_acc(g.value(a), gr, g.grad_ref(b));
        };
    }
    return r;
}

Var Graph::matmul_nt(Var a, Var b) {
    require_rank2(value(a), "matmul_nt");
    require_rank2(value(b), "matmul_nt");
    if (value(a).cols() != value(b).cols()) {
        throw std::invalid_argument("matmul_nt: inner dimension mismatch " + value(a).shape_str() +
                                    " x " + value(b).shape_str() + "^T");
    }
    Tensor out = Tensor::zeros({value(a).rows(), value(b).rows()});
    matmul_nt_acc(value(a), value(b), out);
    bool tr = tracked(a) || tracked(b);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [a, b, r](Graph& g) {
            const Tensor& gr = g.nodes_[r.id].grad;
            if (g.tracked(a)) matmul_nn_acc(gr, g.value(b), g.grad_ref(a));
            if (g.tracked(b)) matmul_tn_acc(gr, g.value(a), g.grad_ref(b));
        };
    }
    return r;
}

Var Graph::add_rowvec(Var m, Var v) {
    require_rank2(value(m), "add_rowvec");
    require_rank2(value(v), "add_rowvec");
    if (value(v).rows() != 1 || value(v).cols() != value(m).cols()) {
        throw std::invalid_argument("add_rowvec: expected (1," + std::to_string(value(m).cols()) +
                                    "), got " + value(v).shape_str());
    }
    const std::size_t rws = value(m).rows(), c = value(m).cols();
    Tensor out = value(m);
    {
        auto& o = out.data();
        const auto& vv = value(v).data();
        for (std::size_t i = 0; i < rws; ++i)
            for (std::size_t j = 0; j < c; ++j) o[i * c + j] += vv[j];
    }
    bool tr = tracked(m) || tracked(v);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [m, v, r, rws, c](Graph& g) {
            const Tensor& gr = g.nodes_[r.id].grad;
            if (g.tracked(m)) add_into(g.grad_ref(m), gr);
            if (g.tracked(v)) {
                auto& dv = g.grad_ref(v).data();
                const auto& grd = gr.data();
                for (std::size_t i = 0; i < rws; ++i)
                    for (std::size_t j = 0; j < c; ++j) dv[j] += grd[i * c + j];
            }
        };
    }
    return r;
}

Var Graph::mul_rowvec(Var m, Var v) {
    require_rank2(value(m), "mul_rowvec");
    require_rank2(value(v), "mul_rowvec");
    if (value(v).rows() != 1 || value(v).cols() != value(m).cols()) {
        throw std::invalid_argument("mul_rowvec: expected (1," + std::to_string(value(m).cols()) +
                                    "), got " + value(v).shape_str());
    }
    const std::size_t rws = value(m).rows(), c = value(m).cols();
    Tensor out = value(m);
    {
        auto& o = out.data();
        const auto& vv = value(v).data();
        for (std::size_t i = 0; i < rws; ++i)
            for (std::size_t j = 0; j < c; ++j) o[i * c + j] *= vv[j];
    }
    bool tr = tracked(m) || tracked(v);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [m, v, r, rws, c](Graph& g) {
            const auto& grd = g.nodes_[r.id].grad.data();
            const auto& mv = g.value(m).data();
            const auto& vv = g.value(v).data();
            if (g.tracked(m)) {
                auto& dm = g.grad_ref(m).data();
                for (std::size_t i = 0; i < rws; ++i)
                    for (std::size_t j = 0; j < c; ++j) dm[i * c + j] += grd[i * c + j] * vv[j];
            }
            if (g.tracked(v)) {
                auto& dv = g.grad_ref(v).data();
                for (std::size_t i = 0; i < rws; ++i)
                    for (std::size_t j = 0; j < c; ++j) dv[j] += grd[i * c + j] * mv[i * c + j];
            }
        };
    }
    return r;
}

Var Graph::gather(Var a, std::vector<std::int64_t> idx, std::vector<std::size_t> out_shape) {
    std::size_t n_out = 1;
    for (std::size_t d : out_shape) n_out *= d;
    if (out_shape.empty()) n_out = 0;
    if (n_out != idx.size()) {
        throw std::invalid_argument("gather: index count " + std::to_string(idx.size()) +
                                    " does not match output element count " + std::to_string(n_out));
    }
    const auto& src = value(a).data();
    const std::int64_t n_in = static_cast<std::int64_t>(src.size());
    Tensor out(std::move(out_shape));
    auto& o = out.data();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::int64_t k = idx[i];
        if (k < -1 || k >= n_in) {
            throw std::invalid_argument("gather: index " + std::to_string(k) +
                                        " out of range for " + std::to_string(n_in) + " elements");
        }
        o[i] = (k < 0) ? 0.0 : src[static_cast<std::size_t>(k)];
    }
    bool tr = tracked(a);
    Var r = push(std::move(out), tr);
    if (tr) {
        auto ix = std::make_shared<std::vector<std::int64_t>>(std::move(idx));
        nodes_[r.id].back = [a, r, ix](Graph& g) {
            const auto& gr = g.nodes_[r.id].grad.data();
            auto& da = g.grad_ref(a).data();
            for (std::size_t i = 0; i < ix->size(); ++i) {
                const std::int64_t k = (*ix)[i];
                if (k >= 0) da[static_cast<std::size_t>(k)] += gr[i];
            }
        };
    }
    return r;
}

Var Graph::gather_rows(Var m, std::vector<std::size_t> rows_idx) {
    require_rank2(value(m), "gather_rows");
    const std::size_t rws = value(m).rows(), c = value(m).cols();
    for (std::size_t k : rows_idx) {
        if (k >= rws) {
            throw std::invalid_argument("gather_rows: row " + std::to_string(k) +
                                        " out of range for " + value(m).shape_str());
        }
    }
    Tensor out({rows_idx.size(), c});
    {
        auto& o = out.data();
        const auto& src = value(m).data();
        for (std::size_t i = 0; i < rows_idx.size(); ++i)
            for (std::size_t j = 0; j < c; ++j) o[i * c + j] = src[rows_idx[i] * c + j];
    }
    bool tr = tracked(m);
    Var r = push(std::move(out), tr);
    if (tr) {
        auto ix = std::make_shared<std::vector<std::size_t>>(std::move(rows_idx));
        nodes_[r.id].back = [m, r, ix, c](Graph& g) {
            const auto& gr = g.nodes_[r.id].grad.data();
            auto& dm = g.grad_ref(m).data();
            for (std::size_t i = 0; i < ix->size(); ++i)
                for (std::size_t j = 0; j < c; ++j) dm[(*ix)[i] * c + j] += gr[i * c + j];
        };
    }
    return r;
}

Var Graph::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
    const std::size_t c = value(parts[0]).cols();
    std::size_t total = 0;
    bool tr = false;
    for (Var p : parts) {
        require_rank2(value(p), "concat_rows");
        if (value(p).cols() != c) {
            throw std::invalid_argument("concat_rows: column mismatch " + value(p).shape_str() +
                                        " vs (*, " + std::to_string(c) + ")");
        }
        total += value(p).rows();
        tr = tr || tracked(p);
    }
    Tensor out({total, c});
    {
        auto& o = out.data();
        std::size_t off = 0;
        for (Var p : parts) {
            const auto& src = value(p).data();
            std::copy(src.begin(), src.end(), o.begin() + static_cast<std::ptrdiff_t>(off));
            off += src.size();
        }
    }
    Var r = push(std::move(out), tr);
    if (tr) {
        auto ps = std::make_shared<std::vector<Var>>(parts);
        nodes_[r.id].back = [ps, r](Graph& g) {
            const auto& gr = g.nodes_[r.id].grad.data();
            std::size_t off = 0;
            for (Var p : *ps) {
                const std::size_t n = g.value(p).numel();
                if (g.tracked(p)) {
                    auto& dp = g.grad_ref(p).data();
                    for (std::size_t i = 0; i < n; ++i) dp[i] += gr[off + i];
                }
                off += n;
            }
        };
    }
    return r;
}

Var Graph::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    const std::size_t rws = value(parts[0]).rows();
    std::size_t total = 0;
    bool tr = false;
    for (Var p : parts) {
        require_rank2(value(p), "concat_cols");
        if (value(p).rows() != rws) {
            throw std::invalid_argument("concat_cols: row mismatch " + value(p).shape_str() +
                                        " vs (" + std::to_string(rws) + ", *)");
        }
        total += value(p).cols();
        tr = tr || tracked(p);
    }
    Tensor out({rws, total});
    {
        auto& o = out.data();
        std::size_t coff = 0;
        for (Var p : parts) {
            const std::size_t pc = value(p).cols();
            const auto& src = value(p).data();
            for (std::size_t i = 0; i < rws; ++i)
                for (std::size_t j = 0; j < pc; ++j) o[i * total + coff + j] = src[i * pc + j];
            coff += pc;
        }
    }
    Var r = push(std::move(out), tr);
    if (tr) {
        auto ps = std::make_shared<std::vector<Var>>(parts);
        nodes_[r.id].back = [ps, r, rws, total](Graph& g) {
            const auto& gr = g.nodes_[r.id].grad.data();
            std::size_t coff = 0;
            for (Var p : *ps) {
                const std::size_t pc = g.value(p).cols();
                if (g.tracked(p)) {
                    auto& dp = g.grad_ref(p).data();
                    for (std::size_t i = 0; i < rws; ++i)
                        for (std::size_t j = 0; j < pc; ++j)
                            dp[i * pc + j] += gr[i * total + coff + j];
                }
                coff += pc;
            }
        };
    }
    return r;
}

Var Graph::slice_rows(Var m, std::size_t r0, std::size_t r1) {
    require_rank2(value(m), "slice_rows");
    if (r0 >= r1 || r1 > value(m).rows()) {
        throw std::invalid_argument("slice_rows: range [" + std::to_string(r0) + ", " +
                                    std::to_string(r1) + ") invalid for " + value(m).shape_str());
    }
    const std::size_t c = value(m).cols();
    Tensor out({r1 - r0, c});
    std::copy(value(m).data().begin() + static_cast<std::ptrdiff_t>(r0 * c),
              value(m).data().begin() + static_cast<std::ptrdiff_t>(r1 * c), out.data().begin());
    bool tr = tracked(m);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [m, r, r0, c](Graph& g) {
            const auto& gr = g.nodes_[r.id].grad.data();
            auto& dm = g.grad_ref(m).data();
            for (std::size_t i = 0; i < gr.size(); ++i) dm[r0 * c + i] += gr[i];
        };
    }
    return r;
}

Var Graph::slice_cols(Var m, std::size_t c0, std::size_t c1) {
    require_rank2(value(m), "slice_cols");
    if (c0 >= c1 || c1 > value(m).cols()) {
        throw std::invalid_argument("slice_cols: range [" + std::to_string(c0) + ", " +
                                    std::to_string(c1) + ") invalid for " + value(m).shape_str());
    }
    const std::size_t rws = value(m).rows(), c = value(m).cols(), w = c1 - c0;
    Tensor out({rws, w});
    {
        auto& o = out.data();
        const auto& src = value(m).data();
        for (std::size_t i = 0; i < rws; ++i)
            for (std::size_t j = 0; j < w; ++j) o[i * w + j] = src[i * c + c0 + j];
    }
    bool tr = tracked(m);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [m, r, c0, c, w, rws](Graph& g) {
            const auto& gr = g.nodes_[r.id].grad.data();
            auto& dm = g.grad_ref(m).data();
            for (std::size_t i = 0; i < rws; ++i)
                for (std::size_t j = 0; j < w; ++j) dm[i * c + c0 + j] += gr[i * w + j];
        };
    }
    return r;
}

Var Graph::reshape(Var a, std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    if (shape.empty()) n = 0;
    if (n != value(a).numel()) {
        throw std::invalid_argument("reshape: cannot view " + value(a).shape_str() + " as " +
                                    Tensor(shape).shape_str());
    }
    Tensor out(std::move(shape), value(a).data());
    bool tr = tracked(a);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [a, r](Graph& g) {
            const auto& gr = g.nodes_[r.id].grad.data();
            auto& da = g.grad_ref(a).data();
            for (std::size_t i = 0; i < da.size(); ++i) da[i] += gr[i];
        };
    }
    return r;
}

Var Graph::transpose(Var m) {
    require_rank2(value(m), "transpose");
    const std::size_t rws = value(m).rows(), c = value(m).cols();
    Tensor out({c, rws});
    {
        auto& o = out.data();
        const auto& src = value(m).data();
        for (std::size_t i = 0; i < rws; ++i)
            for (std::size_t j = 0; j < c; ++j) o[j * rws + i] = src[i * c + j];
    }
    bool tr = tracked(m);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [m, r, rws, c](Graph& g) {
            const auto& gr = g.nodes_[r.id].grad.data();
            auto& dm = g.grad_ref(m).data();
            for (std::size_t i = 0; i < rws; ++i)
                for (std::size_t j = 0; j < c; ++j) dm[i * c + j] += gr[j * rws + i];
        };
    }
    return r;
}

Var Graph::softmax_rows(Var m) {
    require_rank2(value(m), "softmax_rows");
    const std::size_t rws = value(m).rows(), c = value(m).cols();
    Tensor out({rws, c});
    {
        auto& o = out.data();
        const auto& x = value(m).data();
        for (std::size_t i = 0; i < rws; ++i) {
            double mx = x[i * c];
            for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, x[i * c + j]);
            double s = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                const double e = std::exp(x[i * c + j] - mx);
                o[i * c + j] = e;
                s += e;
            }
            for (std::size_t j = 0; j < c; ++j) o[i * c + j] /= s;
        }
    }
    bool tr = tracked(m);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [m, r, rws, c](Graph& g) {
            const auto& gr = g.nodes_[r.id].grad.data();
            const auto& y = g.value(r).data();
            auto& dm = g.grad_ref(m).data();
            for (std::size_t i = 0; i < rws; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < c; ++j) dot += gr[i * c + j] * y[i * c + j];
                for (std::size_t j = 0; j < c; ++j)
                    dm[i * c + j] += y[i * c + j] * (gr[i * c + j] - dot);
            }
        };
    }
    return r;
}

Var Graph::unary_map(Var a, const char* name, const std::function<double(double)>& f,
                     const std::function<double(double, double)>& dfdx_from_x_y) {
    const Tensor& x = value(a);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = f(x[i]);
    if (!out.all_finite()) {
        throw std::domain_error(std::string(name) + ": non-finite result");
    }
    bool tr = tracked(a);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [a, r, dfdx_from_x_y](Graph& g) {
            const auto& gr = g.nodes_[r.id].grad.data();
            const auto& xv = g.value(a).data();
            const auto& yv = g.value(r).data();
            auto& da = g.grad_ref(a).data();
            for (std::size_t i = 0; i < da.size(); ++i)
                da[i] += gr[i] * dfdx_from_x_y(xv[i], yv[i]);
        };
    }
    return r;
}

Var Graph::tanh_(Var a) {
    return unary_map(a, "tanh", [](double x) { return std::tanh(x); },
                     [](double, double y) { return 1.0 - y * y; });
}

Var Graph::relu(Var a) {
    return unary_map(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
                     [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var Graph::sigmoid(Var a) {
    return unary_map(a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                     [](double, double y) { return y * (1.0 - y); });
}

Var Graph::exp_(Var a) {
    return unary_map(a, "exp", [](double x) { return std::exp(x); },
                     [](double, double y) { return y; });
}

Var Graph::log_(Var a) {
    for (double v : value(a).data())
        if (v <= 0.0) throw std::domain_error("log: input must be positive, got " + std::to_string(v));
    return unary_map(a, "log", [](double x) { return std::log(x); },
                     [](double x, double) { return 1.0 / x; });
}

Var Graph::sqrt_(Var a) {
    for (double v : value(a).data())
        if (v < 0.0) throw std::domain_error("sqrt: input must be non-negative, got " + std::to_string(v));
    return unary_map(a, "sqrt", [](double x) { return std::sqrt(x); },
                     [](double, double y) { return y == 0.0 ? 0.0 : 0.5 / y; });
}

Var Graph::clamp_min(Var a, double lo) {
    return unary_map(a, "clamp_min", [lo](double x) { return x < lo ? lo : x; },
                     [lo](double x, double) { return x > lo ? 1.0 : 0.0; });
}

Var Graph::layer_norm_rows(Var m, double eps) {
    require_rank2(value(m), "layer_norm_rows");
    const std::size_t rws = value(m).rows(), c = value(m).cols();
    if (c == 0) throw std::invalid_argument("layer_norm_rows: empty rows");
    Tensor out({rws, c});
    {
        auto& o = out.data();
        const auto& x = value(m).data();
        for (std::size_t i = 0; i < rws; ++i) {
            double mu = 0.0;
            for (std::size_t j = 0; j < c; ++j) mu += x[i * c + j];
            mu /= static_cast<double>(c);
            double var = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                const double d = x[i * c + j] - mu;
                var += d * d;
            }
            var /= static_cast<double>(c);
            const double s = std::sqrt(var + eps);
            for (std::size_t j = 0; j < c; ++j) o[i * c + j] = (x[i * c + j] - mu) / s;
        }
    }
    bool tr = tracked(m);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [m, r, rws, c, eps](Graph& g) {
            const auto& gr = g.nodes_[r.id].grad.data();
            const auto& x = g.value(m).data();
            const auto& y = g.value(r).data();
            auto& dm = g.grad_ref(m).data();
            for (std::size_t i = 0; i < rws; ++i) {
                double mu = 0.0;
                for (std::size_t j = 0; j < c; ++j) mu += x[i * c + j];
                mu /= static_cast<double>(c);
                double var = 0.0;
                for (std::size_t j = 0; j < c; ++j) {
                    const double d = x[i * c + j] - mu;
                    var += d * d;
                }
                var /= static_cast<double>(c);
                const double s = std::sqrt(var + eps);
                double gmean = 0.0, gymean = 0.0;
                for (std::size_t j = 0; j < c; ++j) {
                    gmean += gr[i * c + j];
                    gymean += gr[i * c + j] * y[i * c + j];
                }
                gmean /= static_cast<double>(c);
                gymean /= static_cast<double>(c);
                for (std::size_t j = 0; j < c; ++j)
                    dm[i * c + j] += (gr[i * c + j] - gmean - y[i * c + j] * gymean) / s;
            }
        };
    }
    return r;
}

Var Graph::sum(Var a) {
    double s = 0.0;
    for (double v : value(a).data()) s += v;
    bool tr = tracked(a);
    Var r = push(Tensor::scalar(s), tr);
    if (tr) {
        nodes_[r.id].back = [a, r](Graph& g) {
            const double gr = g.nodes_[r.id].grad[0];
            auto& da = g.grad_ref(a).data();
            for (double& v : da) v += gr;
        };
    }
    return r;
}

Var Graph::mean(Var a) {
    const std::size_t n = value(a).numel();
    if (n == 0) throw std::invalid_argument("mean: empty tensor");
    double s = 0.0;
    for (double v : value(a).data()) s += v;
    bool tr = tracked(a);
    Var r = push(Tensor::scalar(s / static_cast<double>(n)), tr);
    if (tr) {
        nodes_[r.id].back = [a, r, n](Graph& g) {
            const double gr = g.nodes_[r.id].grad[0] / static_cast<double>(n);
            auto& da = g.grad_ref(a).data();
            for (double& v : da) v += gr;
        };
    }
    return r;
}

Var Graph::sum_rows(Var m) {
    require_rank2(value(m), "sum_rows");
    const std::size_t rws = value(m).rows(), c = value(m).cols();
    Tensor out({rws, 1});
    {
        const auto& x = value(m).data();
        for (std::size_t i = 0; i < rws; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < c; ++j) s += x[i * c + j];
            out[i] = s;
        }
    }
    bool tr = tracked(m);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [m, r, rws, c](Graph& g) {
            const auto& gr = g.nodes_[r.id].grad.data();
            auto& dm = g.grad_ref(m).data();
            for (std::size_t i = 0; i < rws; ++i)
                for (std::size_t j = 0; j < c; ++j) dm[i * c + j] += gr[i];
        };
    }
    return r;
}

Var Graph::sum_cols(Var m) {
    require_rank2(value(m), "sum_cols");
    const std::size_t rws = value(m).rows(), c = value(m).cols();
    Tensor out({1, c});
    {
        const auto& x = value(m).data();
        for (std::size_t i = 0; i < rws; ++i)
            for (std::size_t j = 0; j < c; ++j) out[j] += x[i * c + j];
    }
    bool tr = tracked(m);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [m, r, rws, c](Graph& g) {
            const auto& gr = g.nodes_[r.id].grad.data();
            auto& dm = g.grad_ref(m).data();
            for (std::size_t i = 0; i < rws; ++i)
                for (std::size_t j = 0; j < c; ++j) dm[i * c + j] += gr[j];
        };
    }
    return r;
}

Var Graph::row_normalize(Var m) {
    require_rank2(value(m), "row_normalize");
    const std::size_t rws = value(m).rows(), c = value(m).cols();
    Tensor out({rws, c});
    {
        const auto& x = value(m).data();
        auto& o = out.data();
        for (std::size_t i = 0; i < rws; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < c; ++j) s += x[i * c + j];
            if (s == 0.0) throw std::domain_error("row_normalize: zero row sum at row " + std::to_string(i));
            for (std::size_t j = 0; j < c; ++j) o[i * c + j] = x[i * c + j] / s;
        }
    }
    bool tr = tracked(m);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [m, r, rws, c](Graph& g) {
            const auto& gr = g.nodes_[r.id].grad.data();
            const auto& x = g.value(m).data();
            const auto& y = g.value(r).data();
            auto& dm = g.grad_ref(m).data();
            for (std::size_t i = 0; i < rws; ++i) {
                double s = 0.0, dot = 0.0;
                for (std::size_t j = 0; j < c; ++j) {
                    s += x[i * c + j];
                    dot += gr[i * c + j] * y[i * c + j];
                }
                for (std::size_t j = 0; j < c; ++j) dm[i * c + j] += (gr[i * c + j] - dot) / s;
            }
        };
    }
    return r;
}

Var Graph::sqdist(Var x, Var centers) {
    require_rank2(value(x), "sqdist");
    require_rank2(value(centers), "sqdist");
    if (value(x).cols() != value(centers).cols()) {
        throw std::invalid_argument("sqdist: dimension mismatch " + value(x).shape_str() + " vs " +
                                    value(centers).shape_str());
    }
    const std::size_t l = value(x).rows(), k = value(centers).rows(), d = value(x).cols();
    Tensor out({l, k});
    {
        const auto& xv = value(x).data();
        const auto& cv = value(centers).data();
        auto& o = out.data();
        for (std::size_t i = 0; i < l; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                double s = 0.0;
                for (std::size_t t = 0; t < d; ++t) {
                    const double diff = xv[i * d + t] - cv[j * d + t];
                    s += diff * diff;
                }
                o[i * k + j] = s;
            }
        }
    }
    bool tr = tracked(x) || tracked(centers);
    Var r = push(std::move(out), tr);
    if (tr) {
        nodes_[r.id].back = [x, centers, r, l, k, d](Graph& g) {
            const auto& gr = g.nodes_[r.id].grad.data();
            const auto& xv = g.value(x).data();
            const auto& cv = g.value(centers).data();
            if (g.tracked(x)) {
                auto& dx = g.grad_ref(x).data();
                for (std::size_t i = 0; i < l; ++i)
                    for (std::size_t j = 0; j < k; ++j) {
                        const double w = 2.0 * gr[i * k + j];
                        for (std::size_t t = 0; t < d; ++t)
                            dx[i * d + t] += w * (xv[i * d + t] - cv[j * d + t]);
                    }
            }
            if (g.tracked(centers)) {
                auto& dc = g.grad_ref(centers).data();
                for (std::size_t i = 0; i < l; ++i)
                    for (std::size_t j = 0; j < k; ++j) {
                        const double w = 2.0 * gr[i * k + j];
                        for (std::size_t t = 0; t < d; ++t)
                            dc[j * d + t] += w * (cv[j * d + t] - xv[i * d + t]);
                    }
            }
        };
    }
    return r;
}

Var Graph::detach(Var a) { return push(value(a), false); }

void Graph::backward(Var loss) {
    if (ran_backward_) throw std::logic_error("Graph::backward: may only run once per graph");
    if (value(loss).numel() != 1) {
        throw std::invalid_argument("Graph::backward: loss must hold one element, got shape " +
                                    value(loss).shape_str());
    }
    ran_backward_ = true;
    for (std::size_t i = 0; i <= loss.id; ++i) {
        if (nodes_[i].tracked) nodes_[i].grad = Tensor::zeros(nodes_[i].value.shape());
    }
    if (!nodes_[loss.id].tracked) return;  // loss independent of any tracked input
    nodes_[loss.id].grad[0] = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        if (nodes_[i].tracked && nodes_[i].back) nodes_[i].back(*this);
    }
}

const Tensor& Graph::grad(Var v) const {
    if (!ran_backward_) throw std::logic_error("Graph::grad: backward() has not run");
    if (!nodes_[v.id].tracked) {
        throw std::invalid_argument("Graph::grad: node is not gradient-tracked");
    }
    return nodes_[v.id].grad;
}

Tensor Graph::param_grad(const std::string& name) const {
    if (!ran_backward_) throw std::logic_error("Graph::param_grad: backward() has not run");
    auto it = params_.find(name);
    if (it == params_.end()) {
        throw std::invalid_argument("Graph::param_grad: unknown parameter '" + name + "'");
    }
    const Node& n = nodes_[it->second];
    if (n.grad.numel() == 0) return Tensor::zeros(n.value.shape());
    return n.grad;
}

std::map<std::string, Tensor> Graph::param_grads() const {
    std::map<std::string, Tensor> out;
    for (const auto& [name, id] : params_) out[name] = param_grad(name);
    return out;
}

}  // namespace beammap::nn
