#include "beammap/sim/dataset.hpp"

#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "beammap/util/io.hpp"

namespace beammap::sim {

namespace {

using beammap::util::fmt_double;
using beammap::util::parse_double;
using beammap::util::split;

std::string mask_to_bits(const std::vector<std::size_t>& mask, std::size_t n) {
    std::string bits(n, '0');
    for (std::size_t k : mask) bits[k] = '1';
    return bits;
}

}  // namespace

Dataset build_dataset(const Environment& env, const ArrayConfig& array, const Codebook& cb,
                      const DatasetConfig& cfg, std::uint64_t seed) {
    if (cfg.n_traj == 0) throw std::invalid_argument("build_dataset: n_traj must be positive");
    const std::size_t n_beams = env.bs_positions.size() * cb.size();
    if (cfg.m_observed == 0 || cfg.m_observed > cb.size()) {
        throw std::invalid_argument("build_dataset: m_observed must lie in [1, " +
                                    std::to_string(cb.size()) + "] beams per base station");
    }

    Dataset ds;
    ds.env = env;
    ds.array = array;
    ds.beams_per_bs = cb.size();
    ds.n_beams = n_beams;
    ds.cfg = cfg;
    ds.seed = seed;
    ds.trajectories.resize(cfg.n_traj);

    for (std::size_t i = 0; i < cfg.n_traj; ++i) {
        auto rng_walk = beammap::nn::Rng::stream(seed, 100000 + i);
        auto rng_meas = beammap::nn::Rng::stream(seed, 200000 + i);
        auto rng_coarse = beammap::nn::Rng::stream(seed, 300000 + i);

        Trajectory traj = gen_trajectory(env.bounds, cfg.profile, cfg.duration, cfg.dt, rng_walk);
        TrajectoryData& td = ds.trajectories[i];
        td.timestamps = traj.timestamps;
        td.true_pos = traj.positions;
        td.coarse_pos = coarse_labels(traj.positions, cfg.sigma2_coarse, rng_coarse);
        td.masks.reserve(td.length());
        td.values.reserve(td.length());
        for (Vec2 p : traj.positions) {
            const auto mask = sample_mask(n_beams, cfg.m_observed, env.bs_positions.size(), rng_meas);
            std::vector<double> row(n_beams, 0.0);
            std::size_t col = 0;
            std::size_t mi = 0;
            for (std::size_t b = 0; b < env.bs_positions.size(); ++b) {
                PathSet ps;
                bool have_paths = false;
                for (std::size_t j = 0; j < cb.size(); ++j, ++col) {
                    if (mi < mask.size() && mask[mi] == col) {
                        // Paths depend only on geometry; synthesize once per
                        // base station and only when some beam is observed.
                        if (!have_paths) {
                            ps = synth_paths(env.bs_positions[b], p, env.walls);
                            have_paths = true;
                        }
                        row[col] = measure_csi(ps, cb.beams[j], array, cfg.noise_sigma, &rng_meas);
                        ++mi;
                    }
                }
            }
            td.masks.push_back(mask);
            td.values.push_back(std::move(row));
        }
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
    std::filesystem::create_directories(dir);

    nlohmann::json h;
    h["format_version"] = 1;
    h["env"] = env_to_json(ds.env);
    h["array"] = {{"n_antennas", ds.array.n_antennas},
                  {"element_spacing", ds.array.element_spacing}};
    h["beams_per_bs"] = ds.beams_per_bs;
    h["n_beams"] = ds.n_beams;
    h["config"] = {{"n_traj", ds.cfg.n_traj},
                   {"duration", ds.cfg.duration},
                   {"dt", ds.cfg.dt},
                   {"m_observed", ds.cfg.m_observed},
                   {"sigma2_coarse", ds.cfg.sigma2_coarse},
                   {"noise_sigma", ds.cfg.noise_sigma},
                   {"profile", profile_to_json(ds.cfg.profile)}};
    h["seed"] = ds.seed;
    beammap::util::write_text_file(dir + "/header.json", h.dump(2) + "\n");

    std::ostringstream csv;
    csv << "traj,step,t,true_x,true_y,coarse_x,coarse_y,mask";
    for (std::size_t j = 0; j < ds.n_beams; ++j) csv << ",v" << j;
    csv << "\n";
    for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
        const TrajectoryData& td = ds.trajectories[i];
        for (std::size_t l = 0; l < td.length(); ++l) {
            csv << i << ',' << l << ',' << fmt_double(td.timestamps[l]) << ','
                << fmt_double(td.true_pos[l].x) << ',' << fmt_double(td.true_pos[l].y) << ','
                << fmt_double(td.coarse_pos[l].x) << ',' << fmt_double(td.coarse_pos[l].y) << ','
                << mask_to_bits(td.masks[l], ds.n_beams);
            for (std::size_t j = 0; j < ds.n_beams; ++j) csv << ',' << fmt_double(td.values[l][j]);
            csv << "\n";
        }
    }
    beammap::util::write_text_file(dir + "/data.csv", csv.str());
}

Dataset load_dataset(const std::string& dir) {
    const auto h = nlohmann::json::parse(beammap::util::read_text_file(dir + "/header.json"));
    if (h.at("format_version").get<int>() != 1) {
        throw std::runtime_error("load_dataset: unsupported format_version");
    }

    Dataset ds;
    ds.env = env_from_json(h.at("env"));
    ds.array.n_antennas = h.at("array").at("n_antennas").get<std::size_t>();
    ds.array.element_spacing = h.at("array").at("element_spacing").get<double>();
    ds.beams_per_bs = h.at("beams_per_bs").get<std::size_t>();
    ds.n_beams = h.at("n_beams").get<std::size_t>();
    const auto& c = h.at("config");
    ds.cfg.n_traj = c.at("n_traj").get<std::size_t>();
    ds.cfg.duration = c.at("duration").get<double>();
    ds.cfg.dt = c.at("dt").get<double>();
    ds.cfg.m_observed = c.at("m_observed").get<std::size_t>();
    ds.cfg.sigma2_coarse = c.at("sigma2_coarse").get<double>();
    ds.cfg.noise_sigma = c.at("noise_sigma").get<double>();
    ds.cfg.profile = profile_from_json(c.at("profile"));
    ds.seed = h.at("seed").get<std::uint64_t>();
    ds.trajectories.resize(ds.cfg.n_traj);

    const std::string csv = beammap::util::read_text_file(dir + "/data.csv");
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_dataset: empty data.csv");
    const std::size_t n_cols = 8 + ds.n_beams;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != n_cols) {
            throw std::runtime_error("load_dataset: line " + std::to_string(line_no) + " has " +
                                     std::to_string(f.size()) + " columns, expected " +
                                     std::to_string(n_cols));
        }
        const std::size_t traj = std::stoul(f[0]);
        if (traj >= ds.trajectories.size()) {
            throw std::runtime_error("load_dataset: line " + std::to_string(line_no) +
                                     ": trajectory index out of range");
        }
        TrajectoryData& td = ds.trajectories[traj];
        const std::size_t step = std::stoul(f[1]);
        if (step != td.length()) {
            throw std::runtime_error("load_dataset: line " + std::to_string(line_no) +
                                     ": steps out of order");
        }
        td.timestamps.push_back(parse_double(f[2]));
        td.true_pos.push_back({parse_double(f[3]), parse_double(f[4])});
        td.coarse_pos.push_back({parse_double(f[5]), parse_double(f[6])});
        const std::string& bits = f[7];
        if (bits.size() != ds.n_beams) {
            throw std::runtime_error("load_dataset: line " + std::to_string(line_no) +
                                     ": mask width mismatch");
        }
        std::vector<std::size_t> mask;
        for (std::size_t j = 0; j < bits.size(); ++j) {
            if (bits[j] == '1') mask.push_back(j);
            else if (bits[j] != '0') {
                throw std::runtime_error("load_dataset: line " + std::to_string(line_no) +
                                         ": bad mask character");
            }
        }
        td.masks.push_back(std::move(mask));
        std::vector<double> row(ds.n_beams);
        for (std::size_t j = 0; j < ds.n_beams; ++j) row[j] = parse_double(f[8 + j]);
        td.values.push_back(std::move(row));
    }
    for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
        if (ds.trajectories[i].length() == 0) {
            throw std::runtime_error("load_dataset: trajectory " + std::to_string(i) + " is empty");
        }
    }
    return ds;
}

}  // namespace beammap::sim
