#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "beammap/nn/graph.hpp"
#include "beammap/nn/params.hpp"
#include "beammap/nn/rng.hpp"

namespace testutil {

using beammap::nn::Graph;
using beammap::nn::ParamStore;
using beammap::nn::Rng;
using beammap::nn::Tensor;
using beammap::nn::Var;

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Deterministic filler with entries in [lo, hi).
inline Tensor rand_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0,
                          double hi = 1.0) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = lo + (hi - lo) * rng.uniform();
    return t;
}

// Reduce any tensor to a scalar with fixed non-uniform weights so that
// index-permutation bugs change the value.
inline Var wsum(Graph& g, Var v) {
    const Tensor& t = g.value(v);
    Tensor w(t.shape());
    for (std::size_t i = 0; i < w.numel(); ++i) {
        w[i] = 1.2 + std::sin(0.7 * static_cast<double>(i) + 0.3);
    }
    return g.sum(g.mul(v, g.constant(std::move(w))));
}

// Central-difference check of the gradient of `build` w.r.t. every element
// of every input. Returns the worst rel_err between analytic and numeric.
inline double fd_max_rel(const std::function<Var(Graph&, const std::vector<Var>&)>& build,
                         const std::vector<Tensor>& inputs, double h = 1e-5) {
    const auto eval = [&](const std::vector<Tensor>& ins) {
        Graph g;
        std::vector<Var> vars;
        vars.reserve(ins.size());
        for (const auto& t : ins) vars.push_back(g.leaf(t));
        return g.value(build(g, vars))[0];
    };

    Graph g;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const auto& t : inputs) vars.push_back(g.leaf(t));
    const Var y = build(g, vars);
    g.backward(y);
    std::vector<Tensor> analytic;
    analytic.reserve(vars.size());
    for (Var v : vars) analytic.push_back(g.grad(v));

    double worst = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        for (std::size_t e = 0; e < inputs[i].numel(); ++e) {
            std::vector<Tensor> plus = inputs, minus = inputs;
            plus[i][e] += h;
            minus[i][e] -= h;
            const double fd = (eval(plus) - eval(minus)) / (2.0 * h);
            worst = std::max(worst, rel_err(fd, analytic[i][e]));
        }
    }
    return worst;
}

// Same idea for named parameters: `forward` must build and return the scalar
// loss from the store alone.
inline double fd_params_max_rel(
    const std::function<Var(Graph&, const ParamStore&)>& forward, const ParamStore& ps,
    double h = 1e-5) {
    const auto eval = [&](const ParamStore& store) {
        Graph g;
        return g.value(forward(g, store))[0];
    };

    Graph g;
    const Var y = forward(g, ps);
    g.backward(y);
    const std::map<std::string, Tensor> analytic = g.param_grads();

    double worst = 0.0;
    for (const auto& [name, value] : ps.values()) {
        for (std::size_t e = 0; e < value.numel(); ++e) {
            ParamStore plus = ps, minus = ps;
            plus.get(name)[e] += h;
            minus.get(name)[e] -= h;
            const double fd = (eval(plus) - eval(minus)) / (2.0 * h);
            const double an = analytic.count(name) ? analytic.at(name)[e] : 0.0;
            worst = std::max(worst, rel_err(fd, an));
        }
    }
    return worst;
}

}  // namespace testutil
