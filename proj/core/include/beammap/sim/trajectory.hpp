#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "beammap/nn/rng.hpp"
#include "beammap/sim/geometry.hpp"

namespace beammap::sim {

// Piecewise speed behaviour along a path. An Accelerate segment ramps from
// the speed at the end of the previous segment to `speed` at `rate` m/s^2;
// its duration is implied. The profile repeats cyclically.
struct SpeedSegment {
    enum class Kind { Constant, Stop, Accelerate };

    Kind kind = Kind::Constant;
    double speed = 1.0;     // Constant: held speed; Accelerate: target speed
    double duration = 1.0;  // seconds; ignored for Accelerate
    double rate = 1.0;      // m/s^2; Accelerate only

    static SpeedSegment constant(double speed, double duration);
    static SpeedSegment stop(double duration);
    static SpeedSegment accelerate(double target_speed, double rate);
};

struct SpeedProfile {
    std::vector<SpeedSegment> segments;
    double initial_speed = 0.0;
    // Std dev of the per-step heading perturbation, rad per sqrt(second).
    double heading_wander_std = 0.0;
};

nlohmann::json profile_to_json(const SpeedProfile& p);
SpeedProfile profile_from_json(const nlohmann::json& j);

// Closed-form time->distance evaluation of a SpeedProfile, exact for every
// segment kind and across segment boundaries.
class SpeedSchedule {
public:
    explicit SpeedSchedule(const SpeedProfile& profile);

    double cycle_duration() const { return cycle_; }
    double speed_at(double t) const;
    double distance_between(double t0, double t1) const;

private:
    struct Piece {
        double t0, dur, v0, accel;  // v(tau) = v0 + accel*tau on [0, dur)
    };
    std::vector<Piece> pieces_;
    double cycle_ = 0.0;
    double cycle_distance_ = 0.0;

    double distance_into_cycle(double t) const;
};

struct Trajectory {
    std::vector<Vec2> positions;
    std::vector<double> timestamps;
    std::vector<bool> bounced;  // step l -> l+1 touched the boundary
    double dt = 0.0;
};

// Random start and heading; heading wanders, speed follows the profile, and
// the walker reflects off the world boundary. positions.size() ==
// floor(duration/dt) + 1.
Trajectory gen_trajectory(const Rect& bounds, const SpeedProfile& profile, double duration,
                          double dt, beammap::nn::Rng& rng);

// True positions corrupted by isotropic Gaussian noise of variance sigma2
// per axis. Models a coarse external positioning feed.
std::vector<Vec2> coarse_labels(const std::vector<Vec2>& positions, double sigma2,
                                beammap::nn::Rng& rng);

}  // namespace beammap::sim
