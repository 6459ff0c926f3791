#include "beammap/rm/beam_map.hpp"

#include <stdexcept>

#include "beammap/util/io.hpp"

namespace beammap::rm {

nn::Tensor ground_truth_map(const sim::Environment& env, const sim::ArrayConfig& array,
                            const sim::Codebook& cb, const GridMap& grid) {
    const std::size_t K = grid.size();
    const std::size_t n_beams = env.bs_positions.size() * cb.size();
    if (K == 0) throw std::invalid_argument("ground_truth_map: empty grid");
    nn::Tensor m({K, n_beams});
    for (std::size_t k = 0; k < K; ++k) {
        const auto row = sim::csi_row(env, array, cb, grid.center(k));
        for (std::size_t j = 0; j < n_beams; ++j) m.at(k, j) = row[j];
    }
    return m;
}

nn::Tensor build_beam_map(const diff::Denoiser& dn, const nn::ParamStore& ps,
                          const diff::DiffusionSchedule& sched, const EmbeddingTable& table,
                          const util::ColumnStats& stats, std::uint64_t seed,
                          std::size_t samples) {
    if (samples == 0) throw std::invalid_argument("build_beam_map: samples must be positive");
    const std::size_t K = table.cells(), D = table.dim();
    nn::Tensor cond({K * samples, D});
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t s = 0; s < samples; ++s) {
            for (std::size_t j = 0; j < D; ++j) {
                cond.at(k * samples + s, j) = table.vectors.at(k, j);
            }
        }
    }
    const nn::Tensor gen = diff::generate(dn, ps, sched, cond, seed);
    nn::Tensor mean({K, gen.cols()});
    const double inv = 1.0 / static_cast<double>(samples);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t j = 0; j < gen.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t s = 0; s < samples; ++s) acc += gen.at(k * samples + s, j);
            mean.at(k, j) = acc * inv;
        }
    }
    return stats.inverse(mean);
}

void save_beam_map(const BeamMapFile& f, const std::string& csv_path,
                   const std::string& json_path) {
    if (f.map.ndim() != 2 || f.map.rows() != f.grid.size()) {
        throw std::invalid_argument("save_beam_map: map rows " + f.map.shape_str() +
                                    " do not match grid of " + std::to_string(f.grid.size()) +
                                    " cells");
    }
    nlohmann::json j{{"format_version", 1},
                     {"grid", grid_to_json(f.grid)},
                     {"n_beams", f.map.cols()},
                     {"seed", f.seed}};
    if (f.stats) j["stats"] = util::stats_to_json(*f.stats);
    util::write_text_file(json_path, j.dump(2) + "\n");

    std::string csv;
    csv.reserve(f.map.numel() * 12);
    for (std::size_t k = 0; k < f.map.rows(); ++k) {
        for (std::size_t c = 0; c < f.map.cols(); ++c) {
            if (c) csv += ',';
            csv += util::fmt_double(f.map.at(k, c));
        }
        csv += '\n';
    }
    util::write_text_file(csv_path, csv);
}

BeamMapFile load_beam_map(const std::string& csv_path, const std::string& json_path) {
    const nlohmann::json j = nlohmann::json::parse(util::read_text_file(json_path));
    if (j.at("format_version").get<int>() != 1) {
        throw std::runtime_error("load_beam_map: unsupported format version");
    }
    BeamMapFile f;
    f.grid = grid_from_json(j.at("grid"));
    f.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("stats")) f.stats = util::stats_from_json(j.at("stats"));
    const std::size_t n_beams = j.at("n_beams").get<std::size_t>();

    const std::string text = util::read_text_file(csv_path);
    f.map = nn::Tensor({f.grid.size(), n_beams});
    std::size_t row = 0, pos = 0;
    while (pos < text.size() && row < f.grid.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const auto cells = util::split(text.substr(pos, end - pos), ',');
        if (cells.size() != n_beams) {
            throw std::runtime_error("load_beam_map: row " + std::to_string(row) + " has " +
                                     std::to_string(cells.size()) + " columns, expected " +
                                     std::to_string(n_beams));
        }
        for (std::size_t c = 0; c < n_beams; ++c) f.map.at(row, c) = util::parse_double(cells[c]);
        ++row;
        pos = end + 1;
    }
    if (row != f.grid.size()) {
        throw std::runtime_error("load_beam_map: expected " + std::to_string(f.grid.size()) +
                                 " rows, found " + std::to_string(row));
    }
    return f;
}

}  // namespace beammap::rm
