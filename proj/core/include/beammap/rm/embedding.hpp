#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "beammap/nn/rng.hpp"
#include "beammap/nn/tensor.hpp"

namespace beammap::rm {

// Per-cell latent codebook with exponential-moving-average statistics. Row k
// of `vectors` is the embedding for grid cell k and always equals
// ema_sum[k] / (ema_count[k] + zeta) after an update.
struct EmbeddingTable {
    nn::Tensor vectors;            // (K, D)
    nn::Tensor ema_sum;            // (K, D)
    std::vector<double> ema_count; // K
    double decay = 0.99;
    double zeta = 1e-5;

    std::size_t cells() const { return vectors.rows(); }
    std::size_t dim() const { return vectors.cols(); }

    static EmbeddingTable init(std::size_t cells, std::size_t dim, nn::Rng& rng,
                               double decay = 0.99, double zeta = 1e-5);
};

// One accumulation batch: latent rows grouped by their assigned cell.
struct CellBatch {
    std::size_t cell = 0;
    std::vector<std::vector<double>> latents;
};

// EMA codebook refresh:
//   sum_k   <- decay * sum_k   + (1-decay) * sum of assigned latents
//   count_k <- decay * count_k + (1-decay) * (number assigned)
//   vec_k   <- sum_k / (count_k + zeta)
// Every cell updates, assigned or not, so stale cells decay toward zero.
void ema_update(EmbeddingTable& table, const std::vector<CellBatch>& batches);

nlohmann::json table_to_json(const EmbeddingTable& t);
EmbeddingTable table_from_json(const nlohmann::json& j);

}  // namespace beammap::rm
