#pragma once

#include <vector>

#include "beammap/nn/graph.hpp"
#include "beammap/rm/embedding.hpp"
#include "beammap/rm/grid.hpp"

namespace beammap::rm {

// Student-t soft assignment of a position to grid cells:
//   r_k  proportional to  (1 + |p - c_k|^2 / alpha)^(-(alpha+1)/2)
// normalized to sum 1 over cells.
std::vector<double> soft_assign(sim::Vec2 p, const GridMap& grid, double alpha);

// Batched differentiable version: phat (L, 2), centers (K, 2) -> (L, K).
nn::Var soft_assign(nn::Graph& g, nn::Var phat, nn::Var centers, double alpha);

// Index of the row maximum; ties resolve to the lowest index.
std::size_t argmax_index(const double* row, std::size_t n);

// Hard assignment per row of a soft-assignment matrix (L, K).
std::vector<std::size_t> assign_cells(const nn::Tensor& soft);

// Cell whose embedding vector is closest to z; ties resolve to the lowest
// index. Alternative assignment rule driven by latent distance rather than
// physical proximity.
std::size_t nearest_latent(const std::vector<double>& z, const EmbeddingTable& table);

// Straight-through quantization: value of row l is table row idx[l], gradient
// w.r.t. zhat is the identity, and no gradient reaches the table.
nn::Var quantize_st(nn::Graph& g, nn::Var zhat, nn::Var table_rows);

// Sharpened self-training target:
//   p_lk = (r_lk^2 / f_k) / sum_k' (r_lk'^2 / f_k'),  f_k = sum_l r_lk
// Columns with f_k == 0 contribute nothing.
nn::Tensor target_distribution(const nn::Tensor& soft);

}  // namespace beammap::rm
