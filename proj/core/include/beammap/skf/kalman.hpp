#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "beammap/nn/tensor.hpp"
#include "beammap/rm/grid.hpp"
#include "beammap/sim/geometry.hpp"

namespace beammap::skf {

// Constant-velocity state [px, py, vx, vy] with white-acceleration process
// noise.
struct KalmanState {
    Eigen::Vector4d x = Eigen::Vector4d::Zero();
    Eigen::Matrix4d P = Eigen::Matrix4d::Identity();
};

struct SkfConfig {
    double process_accel_std = 0.5;  // m/s^2
    double obs_std_coarse = 20.0;    // m
    double obs_std_map = 5.0;        // m, matching the grid resolution
    double init_vel_std = 3.0;       // m/s
};

KalmanState kf_init(sim::Vec2 obs, double obs_std, double vel_std);

KalmanState kf_predict(const KalmanState& s, double dt, double accel_std);

// Position-only measurement update, Joseph-form covariance so P stays
// symmetric positive definite under long update chains.
KalmanState kf_update(const KalmanState& s, sim::Vec2 obs, double obs_std);

// Fingerprint position fix: the center of the reference-map cell whose
// masked columns best match the measurement (least squares). Empty mask
// yields no fix.
std::optional<sim::Vec2> map_fix(const std::vector<double>& values,
                                 const std::vector<std::size_t>& mask,
                                 const nn::Tensor& reference_map, const rm::GridMap& grid);

// Tracks one trajectory by fusing the coarse position feed with per-step map
// fixes. Returns the filtered positions, one per input step.
std::vector<sim::Vec2> track(const std::vector<sim::Vec2>& coarse,
                             const std::vector<std::vector<double>>& values,
                             const std::vector<std::vector<std::size_t>>& masks,
                             const nn::Tensor& reference_map, const rm::GridMap& grid, double dt,
                             const SkfConfig& cfg);

}  // namespace beammap::skf
