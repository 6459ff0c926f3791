#include "beammap/rm/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace beammap::rm {

sim::Vec2 GridMap::center(std::size_t k) const {
    if (k >= size()) {
        throw std::invalid_argument("GridMap::center: cell " + std::to_string(k) +
                                    " out of range for " + std::to_string(size()) + " cells");
    }
    const std::size_t ix = k % nx, iy = k / nx;
    return {x0 + (static_cast<double>(ix) + 0.5) * resolution,
            y0 + (static_cast<double>(iy) + 0.5) * resolution};
}

std::size_t GridMap::nearest_cell(sim::Vec2 p) const {
    if (size() == 0) throw std::logic_error("GridMap::nearest_cell: empty grid");
    auto clamp_idx = [](double v, std::size_t n) {
        if (v < 0.0) return std::size_t{0};
        const std::size_t i = static_cast<std::size_t>(v);
        return i >= n ? n - 1 : i;
    };
    const std::size_t ix = clamp_idx((p.x - x0) / resolution, nx);
    const std::size_t iy = clamp_idx((p.y - y0) / resolution, ny);
    return iy * nx + ix;
}

nn::Tensor GridMap::centers() const {
    nn::Tensor t({size(), 2});
    for (std::size_t k = 0; k < size(); ++k) {
        const sim::Vec2 c = center(k);
        t[2 * k] = c.x;
        t[2 * k + 1] = c.y;
    }
    return t;
}

GridMap GridMap::cover(const sim::Rect& bounds, double resolution) {
    if (resolution <= 0.0) throw std::invalid_argument("GridMap::cover: resolution must be positive");
    if (bounds.width() <= 0.0 || bounds.height() <= 0.0) {
        throw std::invalid_argument("GridMap::cover: empty bounds");
    }
    GridMap g;
    g.x0 = bounds.xmin;
    g.y0 = bounds.ymin;
    g.resolution = resolution;
    g.nx = static_cast<std::size_t>(std::ceil(bounds.width() / resolution - 1e-12));
    g.ny = static_cast<std::size_t>(std::ceil(bounds.height() / resolution - 1e-12));
    if (g.nx == 0) g.nx = 1;
    if (g.ny == 0) g.ny = 1;
    return g;
}

nlohmann::json grid_to_json(const GridMap& g) {
    return {{"x0", g.x0}, {"y0", g.y0}, {"resolution", g.resolution}, {"nx", g.nx}, {"ny", g.ny}};
}

GridMap grid_from_json(const nlohmann::json& j) {
    GridMap g;
    g.x0 = j.at("x0").get<double>();
    g.y0 = j.at("y0").get<double>();
    g.resolution = j.at("resolution").get<double>();
    g.nx = j.at("nx").get<std::size_t>();
    g.ny = j.at("ny").get<std::size_t>();
    if (g.resolution <= 0.0 || g.size() == 0) throw std::runtime_error("grid_from_json: invalid grid");
    return g;
}

}  // namespace beammap::rm
