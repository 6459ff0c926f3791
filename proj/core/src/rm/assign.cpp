#include "beammap/rm/assign.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace beammap::rm {

std::vector<double> soft_assign(sim::Vec2 p, const GridMap& grid, double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("soft_assign: alpha must be positive");
    const std::size_t K = grid.size();
    std::vector<double> r(K);
    const double expo = -(alpha + 1.0) / 2.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const sim::Vec2 c = grid.center(k);
        const double dx = p.x - c.x, dy = p.y - c.y;
        r[k] = std::pow(1.0 + (dx * dx + dy * dy) / alpha, expo);
        sum += r[k];
    }
    for (double& v : r) v /= sum;
    return r;
}

nn::Var soft_assign(nn::Graph& g, nn::Var phat, nn::Var centers, double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("soft_assign: alpha must be positive");
    nn::Var d2 = g.sqdist(phat, centers);
    nn::Var base = g.add_scalar(g.scale(d2, 1.0 / alpha), 1.0);
    nn::Var r = g.exp_(g.scale(g.log_(base), -(alpha + 1.0) / 2.0));
    return g.row_normalize(r);
}

std::size_t argmax_index(const double* row, std::size_t n) {
    if (n == 0) throw std::invalid_argument("argmax_index: empty row");
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j) {
        if (row[j] > row[best]) best = j;
    }
    return best;
}

std::vector<std::size_t> assign_cells(const nn::Tensor& soft) {
    const std::size_t L = soft.rows(), K = soft.cols();
    std::vector<std::size_t> idx(L);
    for (std::size_t l = 0; l < L; ++l) idx[l] = argmax_index(&soft.data()[l * K], K);
    return idx;
}

std::size_t nearest_latent(const std::vector<double>& z, const EmbeddingTable& table) {
    if (z.size() != table.dim()) {
        throw std::invalid_argument("nearest_latent: latent dim " + std::to_string(z.size()) +
                                    " does not match table dim " + std::to_string(table.dim()));
    }
    const std::size_t K = table.cells(), D = table.dim();
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
        double d = 0.0;
        for (std::size_t j = 0; j < D; ++j) {
            const double diff = z[j] - table.vectors[k * D + j];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

nn::Var quantize_st(nn::Graph& g, nn::Var zhat, nn::Var table_rows) {
    nn::require_same_shape(g.value(zhat), g.value(table_rows), "quantize_st");
    return g.add(zhat, g.detach(g.sub(table_rows, zhat)));
}

nn::Tensor target_distribution(const nn::Tensor& soft) {
    const std::size_t L = soft.rows(), K = soft.cols();
    std::vector<double> f(K, 0.0);
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t k = 0; k < K; ++k) f[k] += soft.at(l, k);
    }
    nn::Tensor p({L, K});
    for (std::size_t l = 0; l < L; ++l) {
        double sum = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double r = soft.at(l, k);
            const double v = (f[k] > 0.0) ? r * r / f[k] : 0.0;
            p.at(l, k) = v;
            sum += v;
        }
        if (sum <= 0.0) {
            throw std::domain_error("target_distribution: row " + std::to_string(l) +
                                    " has no mass");
        }
        for (std::size_t k = 0; k < K; ++k) p.at(l, k) /= sum;
    }
    return p;
}

}  // namespace beammap::rm
