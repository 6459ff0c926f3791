#include "beammap/sim/world.hpp"

#include <algorithm>
#include <stdexcept>

namespace beammap::sim {

Environment make_env(Rect bounds, std::vector<Vec2> bs_positions, std::vector<Wall> walls) {
    if (bounds.width() <= 0.0 || bounds.height() <= 0.0) {
        throw std::invalid_argument("make_env: empty bounds");
    }
    if (bs_positions.empty()) throw std::invalid_argument("make_env: at least one base station");
    for (Vec2 p : bs_positions) {
        if (!bounds.contains(p)) throw std::invalid_argument("make_env: base station outside bounds");
    }
    for (const Wall& w : walls) {
        if (!bounds.contains(w.a) || !bounds.contains(w.b)) {
            throw std::invalid_argument("make_env: wall endpoint outside bounds");
        }
        if (w.a.x == w.b.x && w.a.y == w.b.y) {
            throw std::invalid_argument("make_env: degenerate wall");
        }
        if (w.coeff < 0.0 || w.coeff > 1.0) {
            throw std::invalid_argument("make_env: wall coefficient must lie in [0, 1]");
        }
    }
    return Environment{bounds, std::move(bs_positions), std::move(walls)};
}

nlohmann::json env_to_json(const Environment& env) {
    nlohmann::json j;
    j["bounds"] = {env.bounds.xmin, env.bounds.ymin, env.bounds.xmax, env.bounds.ymax};
    auto jb = nlohmann::json::array();
    for (Vec2 p : env.bs_positions) jb.push_back({p.x, p.y});
    j["bs_positions"] = std::move(jb);
    auto jw = nlohmann::json::array();
    for (const Wall& w : env.walls) {
        jw.push_back({{"a", {w.a.x, w.a.y}}, {"b", {w.b.x, w.b.y}}, {"coeff", w.coeff}});
    }
    j["walls"] = std::move(jw);
    return j;
}

Environment env_from_json(const nlohmann::json& j) {
    const auto& b = j.at("bounds");
    Rect bounds{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                b.at(3).get<double>()};
    std::vector<Vec2> bs;
    for (const auto& p : j.at("bs_positions")) bs.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    std::vector<Wall> walls;
    for (const auto& w : j.at("walls")) {
        walls.push_back({{w.at("a").at(0).get<double>(), w.at("a").at(1).get<double>()},
                         {w.at("b").at(0).get<double>(), w.at("b").at(1).get<double>()},
                         w.at("coeff").get<double>()});
    }
    return make_env(bounds, std::move(bs), std::move(walls));
}

std::vector<double> csi_row(const Environment& env, const ArrayConfig& cfg, const Codebook& cb,
                            Vec2 p) {
    std::vector<double> row;
    row.reserve(env.bs_positions.size() * cb.size());
    for (Vec2 bs : env.bs_positions) {
        const PathSet ps = synth_paths(bs, p, env.walls);
        for (const auto& beam : cb.beams) row.push_back(beam_gain(ps, beam, cfg));
    }
    return row;
}

nn::Tensor csi_rows(const Environment& env, const ArrayConfig& cfg, const Codebook& cb,
                    const std::vector<Vec2>& positions) {
    if (positions.empty()) throw std::invalid_argument("csi_rows: empty position list");
    const std::size_t n = env.bs_positions.size() * cb.size();
    nn::Tensor out({positions.size(), n});
    for (std::size_t l = 0; l < positions.size(); ++l) {
        const auto row = csi_row(env, cfg, cb, positions[l]);
        for (std::size_t j = 0; j < n; ++j) out.at(l, j) = row[j];
    }
    return out;
}

std::vector<std::size_t> sample_mask(std::size_t n, std::size_t m, beammap::nn::Rng& rng) {
    if (m == 0 || m > n) {
        throw std::invalid_argument("sample_mask: need 0 < m <= n, got m=" + std::to_string(m) +
                                    " n=" + std::to_string(n));
    }
    // Partial Fisher-Yates over an index vector; cost O(n).
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + rng.uniform_index(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<std::size_t> sample_mask(std::size_t n_total, std::size_t m_per_bs, std::size_t n_bs,
                                     beammap::nn::Rng& rng) {
    if (n_bs == 0 || n_total % n_bs != 0) {
        throw std::invalid_argument("sample_mask: n_total=" + std::to_string(n_total) +
                                    " not divisible into " + std::to_string(n_bs) + " blocks");
    }
    const std::size_t block = n_total / n_bs;
    std::vector<std::size_t> out;
    out.reserve(m_per_bs * n_bs);
    for (std::size_t b = 0; b < n_bs; ++b) {
        for (std::size_t k : sample_mask(block, m_per_bs, rng)) out.push_back(b * block + k);
    }
    return out;
}

std::vector<double> apply_mask(const std::vector<double>& row,
                               const std::vector<std::size_t>& mask) {
    std::vector<double> out(row.size(), 0.0);
    for (std::size_t k : mask) {
        if (k >= row.size()) {
            throw std::invalid_argument("apply_mask: index " + std::to_string(k) +
                                        " out of range for row of " + std::to_string(row.size()));
        }
        out[k] = row[k];
    }
    return out;
}

bool has_los(const Environment& env, std::size_t bs, Vec2 p) {
    if (bs >= env.bs_positions.size()) throw std::invalid_argument("has_los: bad base station index");
    return !segment_blocked(env.bs_positions[bs], p, env.walls);
}

}  // namespace beammap::sim
