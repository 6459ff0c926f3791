#pragma once

#include <nlohmann/json.hpp>

#include "beammap/nn/tensor.hpp"
#include "beammap/sim/geometry.hpp"

namespace beammap::rm {

// Uniform cell grid over a rectangle. Cells are indexed row-major from the
// lower-left: k = iy * nx + ix.
struct GridMap {
    double x0 = 0.0, y0 = 0.0;
    double resolution = 1.0;
    std::size_t nx = 0, ny = 0;

    std::size_t size() const { return nx * ny; }
    sim::Vec2 center(std::size_t k) const;
    // Cell whose center is closest to p; positions outside clamp to the edge.
    std::size_t nearest_cell(sim::Vec2 p) const;
    nn::Tensor centers() const;  // (K, 2)

    // Smallest grid of `resolution`-sized cells covering the rectangle.
    static GridMap cover(const sim::Rect& bounds, double resolution);
};

nlohmann::json grid_to_json(const GridMap& g);
GridMap grid_from_json(const nlohmann::json& j);

}  // namespace beammap::rm
