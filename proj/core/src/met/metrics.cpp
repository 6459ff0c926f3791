#include "beammap/met/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace beammap::met {

namespace {

void require_paired(const std::vector<sim::Vec2>& a, const std::vector<sim::Vec2>& b,
                    const char* op) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(op) + ": size mismatch " +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    if (a.empty()) throw std::invalid_argument(std::string(op) + ": empty input");
}

void require_k(std::size_t n, std::size_t k, const char* op) {
    // 2k < n-1 keeps the normalization constant positive and the worst-case
    // penalty within [0,1].
    if (k == 0 || 2 * k >= n - 1) {
        throw std::invalid_argument(std::string(op) + ": k=" + std::to_string(k) +
                                    " invalid for n=" + std::to_string(n));
    }
}

// Indices of all points except i, ordered by distance to point i in `pts`,
// ties by index.
std::vector<std::size_t> neighbor_order(const std::vector<sim::Vec2>& pts, std::size_t i) {
    std::vector<std::size_t> order;
    order.reserve(pts.size() - 1);
    for (std::size_t j = 0; j < pts.size(); ++j) {
        if (j != i) order.push_back(j);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double da = dist(pts[i], pts[a]), db = dist(pts[i], pts[b]);
        return da < db || (da == db && a < b);
    });
    return order;
}

}  // namespace

double mean_error(const std::vector<sim::Vec2>& truth, const std::vector<sim::Vec2>& pred) {
    require_paired(truth, pred, "mean_error");
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) acc += dist(truth[i], pred[i]);
    return acc / static_cast<double>(truth.size());
}

double percentile95(std::vector<double> errors) {
    if (errors.empty()) throw std::invalid_argument("percentile95: empty input");
    std::sort(errors.begin(), errors.end());
    const std::size_t n = errors.size();
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(0.95 * static_cast<double>(n) - 1e-12));
    return errors[std::max<std::size_t>(rank, 1) - 1];
}

double trustworthiness(const std::vector<sim::Vec2>& truth, const std::vector<sim::Vec2>& pred,
                       std::size_t k) {
    require_paired(truth, pred, "trustworthiness");
    const std::size_t n = truth.size();
    require_k(n, k, "trustworthiness");
    double penalty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto pred_order = neighbor_order(pred, i);
        const auto true_order = neighbor_order(truth, i);
        // rank of j in the true ordering, 1-based
        std::vector<std::size_t> true_rank(n, 0);
        for (std::size_t r = 0; r < true_order.size(); ++r) true_rank[true_order[r]] = r + 1;
        for (std::size_t r = 0; r < k; ++r) {
            const std::size_t j = pred_order[r];
            if (true_rank[j] > k) {
                penalty += static_cast<double>(true_rank[j] - k);
            }
        }
    }
    const double gamma =
        2.0 / (static_cast<double>(n) * static_cast<double>(k) *
               (2.0 * static_cast<double>(n) - 3.0 * static_cast<double>(k) - 1.0));
    return 1.0 - gamma * penalty;
}

double continuity(const std::vector<sim::Vec2>& truth, const std::vector<sim::Vec2>& pred,
                  std::size_t k) {
    require_paired(truth, pred, "continuity");
    const std::size_t n = truth.size();
    require_k(n, k, "continuity");
    double penalty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto true_order = neighbor_order(truth, i);
        const auto pred_order = neighbor_order(pred, i);
        std::vector<std::size_t> pred_rank(n, 0);
        for (std::size_t r = 0; r < pred_order.size(); ++r) pred_rank[pred_order[r]] = r + 1;
        for (std::size_t r = 0; r < k; ++r) {
            const std::size_t j = true_order[r];
            if (pred_rank[j] > k) {
                penalty += static_cast<double>(pred_rank[j] - k);
            }
        }
    }
    const double gamma =
        2.0 / (static_cast<double>(n) * static_cast<double>(k) *
               (2.0 * static_cast<double>(n) - 3.0 * static_cast<double>(k) - 1.0));
    return 1.0 - gamma * penalty;
}

MapError map_error(const nn::Tensor& pred, const nn::Tensor& truth,
                   const std::vector<std::size_t>& rows) {
    nn::require_same_shape(pred, truth, "map_error");
    if (truth.ndim() != 2) throw std::invalid_argument("map_error: expected rank-2 maps");
    double lo = truth[0], hi = truth[0];
    for (double v : truth.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi == lo) throw std::domain_error("map_error: constant true map cannot be normalized");
    const double inv = 1.0 / (hi - lo);

    std::vector<std::size_t> subset = rows;
    if (subset.empty()) {
        subset.resize(truth.rows());
        std::iota(subset.begin(), subset.end(), 0);
    }
    const std::size_t c = truth.cols();
    double se = 0.0, ref = 0.0;
    for (std::size_t r : subset) {
        if (r >= truth.rows()) throw std::invalid_argument("map_error: row index out of range");
        for (std::size_t j = 0; j < c; ++j) {
            const double tn = (truth.at(r, j) - lo) * inv;
            const double pn = (pred.at(r, j) - lo) * inv;
            se += (pn - tn) * (pn - tn);
            ref += tn * tn;
        }
    }
    if (ref == 0.0) throw std::domain_error("map_error: zero reference energy on selected rows");
    MapError e;
    e.nmse = se / ref;
    e.rmse = std::sqrt(se / (static_cast<double>(subset.size()) * static_cast<double>(c)));
    return e;
}

double capacity(const std::vector<std::complex<double>>& h,
                const std::vector<std::complex<double>>& w, double p_t, double sigma_n2) {
    if (h.size() != w.size() || h.empty()) {
        throw std::invalid_argument("capacity: mismatched or empty vectors");
    }
    if (p_t < 0.0 || sigma_n2 <= 0.0) {
        throw std::invalid_argument("capacity: need p_t >= 0 and sigma_n2 > 0");
    }
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < h.size(); ++i) acc += std::conj(h[i]) * w[i];
    return std::log2(1.0 + p_t * std::norm(acc) / sigma_n2);
}

}  // namespace beammap::met
