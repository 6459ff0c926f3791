#include "beammap/loss/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace beammap::loss {

nn::Var loss_coarse(nn::Graph& g, nn::Var phat, const nn::Tensor& coarse) {
    nn::require_same_shape(g.value(phat), coarse, "loss_coarse");
    nn::Var diff = g.sub(phat, g.constant(coarse));
    nn::Var norms = g.sqrt_(g.sum_rows(g.square(diff)));  // (L, 1)
    return g.mean(norms);
}

nn::Var loss_selftrain(nn::Graph& g, nn::Var soft, const nn::Tensor& target) {
    nn::require_same_shape(g.value(soft), target, "loss_selftrain");
    // sum p*ln(p) is a constant of the fixed target; fold it in as a scalar so
    // the node value equals the full KL while gradients flow only through r.
    double plogp = 0.0;
    for (double p : target.data()) {
        if (p > 0.0) plogp += p * std::log(p);
    }
    nn::Var logr = g.log_(g.clamp_min(soft, 1e-12));
    nn::Var cross = g.sum(g.mul(g.constant(target), logr));
    return g.add_scalar(g.neg(cross), plogp);
}

std::vector<Triplet> build_triplets(const std::vector<double>& timestamps, double window) {
    if (window <= 0.0) throw std::invalid_argument("build_triplets: window must be positive");
    const std::size_t n = timestamps.size();
    std::vector<Triplet> out;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t c = 0; c < n; ++c) {
            const double dc = std::abs(timestamps[a] - timestamps[c]);
            if (c == a || dc == 0.0 || dc > window) continue;
            for (std::size_t f = 0; f < n; ++f) {
                if (std::abs(timestamps[a] - timestamps[f]) > window) {
                    out.push_back({a, c, f});
                }
            }
        }
    }
    return out;
}

std::vector<Triplet> subsample_triplets(std::vector<Triplet> triplets, std::size_t max_count,
                                        nn::Rng& rng) {
    if (max_count == 0) throw std::invalid_argument("subsample_triplets: max_count must be positive");
    if (triplets.size() <= max_count) return triplets;
    // Partial Fisher-Yates: the first max_count slots end up a uniform sample.
    for (std::size_t i = 0; i < max_count; ++i) {
        const std::size_t j = i + rng.uniform_index(triplets.size() - i);
        std::swap(triplets[i], triplets[j]);
    }
    triplets.resize(max_count);
    return triplets;
}

nn::Var loss_triplet(nn::Graph& g, nn::Var phat, const std::vector<Triplet>& triplets,
                     double margin) {
    if (margin < 0.0) throw std::invalid_argument("loss_triplet: negative margin");
    if (triplets.empty()) return g.constant(nn::Tensor::scalar(0.0));
    const std::size_t L = g.value(phat).rows();
    std::vector<std::size_t> ia, ic, iff;
    ia.reserve(triplets.size());
    ic.reserve(triplets.size());
    iff.reserve(triplets.size());
    for (const Triplet& t : triplets) {
        if (t.anchor >= L || t.close >= L || t.far >= L) {
            throw std::invalid_argument("loss_triplet: triplet index out of range");
        }
        ia.push_back(t.anchor);
        ic.push_back(t.close);
        iff.push_back(t.far);
    }
    nn::Var pa = g.gather_rows(phat, ia);
    nn::Var pc = g.gather_rows(phat, ic);
    nn::Var pf = g.gather_rows(phat, iff);
    nn::Var d_close = g.sqrt_(g.sum_rows(g.square(g.sub(pa, pc))));
    nn::Var d_far = g.sqrt_(g.sum_rows(g.square(g.sub(pa, pf))));
    nn::Var hinge = g.relu(g.add_scalar(g.sub(d_close, d_far), margin));
    return g.mean(hinge);
}

nn::Var loss_dynamics(nn::Graph& g, nn::Var phat) {
    const nn::Tensor& p = g.value(phat);
    if (p.ndim() != 2) {
        throw std::invalid_argument("loss_dynamics: expected a 2-D track, got " + p.shape_str());
    }
    if (p.rows() < 3) return g.constant(nn::Tensor::scalar(0.0));
    const std::size_t L = p.rows();
    nn::Var next = g.slice_rows(phat, 2, L);
    nn::Var mid = g.slice_rows(phat, 1, L - 1);
    nn::Var prev = g.slice_rows(phat, 0, L - 2);
    nn::Var second = g.add(g.sub(next, g.scale(mid, 2.0)), prev);
    return g.scale(g.sum(g.square(second)), 1.0 / static_cast<double>(L - 2));
}

nn::Var loss_recon(nn::Graph& g, const nn::Tensor& noise, nn::Var noise_hat, nn::Var zhat,
                   nn::Var zq, bool ema_codebook) {
    nn::require_same_shape(g.value(noise_hat), noise, "loss_recon");
    nn::require_same_shape(g.value(zhat), g.value(zq), "loss_recon");
    const double inv_n = 1.0 / static_cast<double>(noise.rows());
    const double inv_l = 1.0 / static_cast<double>(g.value(zhat).rows());
    nn::Var mse = g.scale(g.sum(g.square(g.sub(noise_hat, g.constant(noise)))), inv_n);
    nn::Var commit = ema_codebook ? g.sub(zhat, g.detach(zq)) : g.sub(g.detach(zhat), zq);
    return g.add(mse, g.scale(g.sum(g.square(commit)), inv_l));
}

nn::Var loss_total(nn::Graph& g, nn::Var s, nn::Var r, nn::Var c, nn::Var t, nn::Var d,
                   const LossWeights& w) {
    const std::array<std::pair<const char*, nn::Var>, 5> parts{
        std::pair{"self-train", s}, {"reconstruction", r}, {"coarse", c}, {"triplet", t},
        {"dynamics", d}};
    for (const auto& [name, v] : parts) {
        if (g.value(v).numel() != 1) {
            throw std::invalid_argument(std::string("loss_total: ") + name +
                                        " term is not a scalar");
        }
        if (!std::isfinite(g.value(v)[0])) {
            throw std::runtime_error(std::string("loss_total: non-finite ") + name + " term");
        }
    }
    nn::Var acc = g.add(s, r);
    acc = g.add(acc, g.scale(c, w.lambda_c));
    acc = g.add(acc, g.scale(t, w.lambda_t));
    acc = g.add(acc, g.scale(d, w.lambda_d));
    return acc;
}

}  // namespace beammap::loss
