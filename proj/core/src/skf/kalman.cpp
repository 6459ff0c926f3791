#include "beammap/skf/kalman.hpp"

#include <limits>
#include <stdexcept>

namespace beammap::skf {

KalmanState kf_init(sim::Vec2 obs, double obs_std, double vel_std) {
    if (obs_std <= 0.0 || vel_std <= 0.0) {
        throw std::invalid_argument("kf_init: standard deviations must be positive");
    }
    KalmanState s;
    s.x << obs.x, obs.y, 0.0, 0.0;
    s.P.setZero();
    s.P(0, 0) = s.P(1, 1) = obs_std * obs_std;
    s.P(2, 2) = s.P(3, 3) = vel_std * vel_std;
    return s;
}

KalmanState kf_predict(const KalmanState& s, double dt, double accel_std) {
    if (dt <= 0.0) throw std::invalid_argument("kf_predict: dt must be positive");
    if (accel_std < 0.0) throw std::invalid_argument("kf_predict: negative accel_std");
    Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
    F(0, 2) = dt;
    F(1, 3) = dt;
    const double q = accel_std * accel_std;
    const double d2 = dt * dt, d3 = d2 * dt, d4 = d3 * dt;
    Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
    Q(0, 0) = Q(1, 1) = q * d4 / 4.0;
    Q(0, 2) = Q(2, 0) = Q(1, 3) = Q(3, 1) = q * d3 / 2.0;
    Q(2, 2) = Q(3, 3) = q * d2;
    KalmanState out;
    out.x = F * s.x;
    out.P = F * s.P * F.transpose() + Q;
    return out;
}

KalmanState kf_update(const KalmanState& s, sim::Vec2 obs, double obs_std) {
    if (obs_std <= 0.0) throw std::invalid_argument("kf_update: obs_std must be positive");
    Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
    H(0, 0) = 1.0;
    H(1, 1) = 1.0;
    const Eigen::Matrix2d R = Eigen::Matrix2d::Identity() * (obs_std * obs_std);
    const Eigen::Vector2d z(obs.x, obs.y);
    const Eigen::Vector2d innov = z - H * s.x;
    const Eigen::Matrix2d S = H * s.P * H.transpose() + R;
    const Eigen::Matrix<double, 4, 2> K = s.P * H.transpose() * S.inverse();
    KalmanState out;
    out.x = s.x + K * innov;
    const Eigen::Matrix4d IKH = Eigen::Matrix4d::Identity() - K * H;
    out.P = IKH * s.P * IKH.transpose() + K * R * K.transpose();
    out.P = 0.5 * (out.P + out.P.transpose().eval());
    return out;
}

std::optional<sim::Vec2> map_fix(const std::vector<double>& values,
                                 const std::vector<std::size_t>& mask,
                                 const nn::Tensor& reference_map, const rm::GridMap& grid) {
    if (mask.empty()) return std::nullopt;
    const std::size_t K = reference_map.rows(), n = reference_map.cols();
    if (K != grid.size()) {
        throw std::invalid_argument("map_fix: map rows do not match grid cells");
    }
    if (values.size() != n) {
        throw std::invalid_argument("map_fix: row width " + std::to_string(values.size()) +
                                    " does not match map columns " + std::to_string(n));
    }
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
        double d = 0.0;
        for (std::size_t j : mask) {
            if (j >= n) throw std::invalid_argument("map_fix: mask index out of range");
            const double diff = reference_map.at(k, j) - values[j];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return grid.center(best);
}

std::vector<sim::Vec2> track(const std::vector<sim::Vec2>& coarse,
                             const std::vector<std::vector<double>>& values,
                             const std::vector<std::vector<std::size_t>>& masks,
                             const nn::Tensor& reference_map, const rm::GridMap& grid, double dt,
                             const SkfConfig& cfg) {
    if (coarse.empty() || coarse.size() != values.size() || coarse.size() != masks.size()) {
        throw std::invalid_argument("track: coarse/values/masks lengths must match and be nonzero");
    }
    std::vector<sim::Vec2> out;
    out.reserve(coarse.size());
    KalmanState s = kf_init(coarse[0], cfg.obs_std_coarse, cfg.init_vel_std);
    if (auto fix = map_fix(values[0], masks[0], reference_map, grid)) {
        s = kf_update(s, *fix, cfg.obs_std_map);
    }
    out.push_back({s.x(0), s.x(1)});
    for (std::size_t l = 1; l < coarse.size(); ++l) {
        s = kf_predict(s, dt, cfg.process_accel_std);
        s = kf_update(s, coarse[l], cfg.obs_std_coarse);
        if (auto fix = map_fix(values[l], masks[l], reference_map, grid)) {
            s = kf_update(s, *fix, cfg.obs_std_map);
        }
        out.push_back({s.x(0), s.x(1)});
    }
    return out;
}

}  // namespace beammap::skf
