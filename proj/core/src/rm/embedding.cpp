#include "beammap/rm/embedding.hpp"

#include <stdexcept>

#include "beammap/nn/params.hpp"

namespace beammap::rm {

EmbeddingTable EmbeddingTable::init(std::size_t cells, std::size_t dim, nn::Rng& rng,
                                    double decay, double zeta) {
    if (cells == 0 || dim == 0) throw std::invalid_argument("EmbeddingTable::init: empty table");
    if (decay <= 0.0 || decay >= 1.0) {
        throw std::invalid_argument("EmbeddingTable::init: decay must lie in (0, 1)");
    }
    if (zeta <= 0.0) throw std::invalid_argument("EmbeddingTable::init: zeta must be positive");
    EmbeddingTable t;
    t.vectors = nn::init_uniform({cells, dim}, dim, rng);
    t.ema_sum = t.vectors;  // consistent with count 1 before the first update
    t.ema_count.assign(cells, 1.0);
    for (std::size_t i = 0; i < t.ema_sum.numel(); ++i) {
        t.ema_sum[i] *= 1.0 + zeta;  // so vectors == ema_sum / (count + zeta) holds at init
    }
    t.decay = decay;
    t.zeta = zeta;
    return t;
}

void ema_update(EmbeddingTable& table, const std::vector<CellBatch>& batches) {
    const std::size_t K = table.cells(), D = table.dim();
    nn::Tensor batch_sum({K, D});
    std::vector<double> batch_count(K, 0.0);
    for (const CellBatch& b : batches) {
        if (b.cell >= K) {
            throw std::invalid_argument("ema_update: cell index " + std::to_string(b.cell) +
                                        " out of range for " + std::to_string(K) + " cells");
        }
        for (const auto& z : b.latents) {
            if (z.size() != D) {
                throw std::invalid_argument("ema_update: latent dim " + std::to_string(z.size()) +
                                            " does not match table dim " + std::to_string(D));
            }
            for (std::size_t d = 0; d < D; ++d) batch_sum[b.cell * D + d] += z[d];
            batch_count[b.cell] += 1.0;
        }
    }
    const double g = table.decay;
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t d = 0; d < D; ++d) {
            table.ema_sum[k * D + d] = g * table.ema_sum[k * D + d] + (1.0 - g) * batch_sum[k * D + d];
        }
        table.ema_count[k] = g * table.ema_count[k] + (1.0 - g) * batch_count[k];
        for (std::size_t d = 0; d < D; ++d) {
            table.vectors[k * D + d] = table.ema_sum[k * D + d] / (table.ema_count[k] + table.zeta);
        }
    }
}

nlohmann::json table_to_json(const EmbeddingTable& t) {
    nlohmann::json j;
    j["vectors"] = nn::tensor_to_json(t.vectors);
    j["ema_sum"] = nn::tensor_to_json(t.ema_sum);
    j["ema_count"] = t.ema_count;
    j["decay"] = t.decay;
    j["zeta"] = t.zeta;
    return j;
}

EmbeddingTable table_from_json(const nlohmann::json& j) {
    EmbeddingTable t;
    t.vectors = nn::tensor_from_json(j.at("vectors"));
    t.ema_sum = nn::tensor_from_json(j.at("ema_sum"));
    t.ema_count = j.at("ema_count").get<std::vector<double>>();
    t.decay = j.at("decay").get<double>();
    t.zeta = j.at("zeta").get<double>();
    if (t.ema_count.size() != t.vectors.rows() || !t.vectors.same_shape(t.ema_sum)) {
        throw std::runtime_error("table_from_json: inconsistent table shapes");
    }
    return t;
}

}  // namespace beammap::rm
