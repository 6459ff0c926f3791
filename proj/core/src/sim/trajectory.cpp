#include "beammap/sim/trajectory.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace beammap::sim {

SpeedSegment SpeedSegment::constant(double speed, double duration) {
    if (speed < 0.0 || duration <= 0.0) {
        throw std::invalid_argument("SpeedSegment::constant: speed >= 0 and duration > 0 required");
    }
    return {Kind::Constant, speed, duration, 0.0};
}

SpeedSegment SpeedSegment::stop(double duration) {
    if (duration <= 0.0) throw std::invalid_argument("SpeedSegment::stop: duration > 0 required");
    return {Kind::Stop, 0.0, duration, 0.0};
}

SpeedSegment SpeedSegment::accelerate(double target_speed, double rate) {
    if (target_speed < 0.0 || rate <= 0.0) {
        throw std::invalid_argument("SpeedSegment::accelerate: target >= 0 and rate > 0 required");
    }
    return {Kind::Accelerate, target_speed, 0.0, rate};
}

SpeedSchedule::SpeedSchedule(const SpeedProfile& profile) {
    if (profile.segments.empty()) throw std::invalid_argument("SpeedSchedule: empty profile");
    double t = 0.0;
    double v = profile.initial_speed;
    for (const SpeedSegment& s : profile.segments) {
        Piece p{};
        p.t0 = t;
        switch (s.kind) {
            case SpeedSegment::Kind::Constant:
                p.dur = s.duration;
                p.v0 = s.speed;
                p.accel = 0.0;
                v = s.speed;
                break;
            case SpeedSegment::Kind::Stop:
                p.dur = s.duration;
                p.v0 = 0.0;
                p.accel = 0.0;
                v = 0.0;
                break;
            case SpeedSegment::Kind::Accelerate: {
                const double dv = s.speed - v;
                p.dur = std::abs(dv) / s.rate;
                p.v0 = v;
                p.accel = dv >= 0.0 ? s.rate : -s.rate;
                v = s.speed;
                break;
            }
        }
        if (p.dur > 0.0) {
            pieces_.push_back(p);
            t += p.dur;
        }
    }
    if (pieces_.empty()) throw std::invalid_argument("SpeedSchedule: profile has zero duration");
    cycle_ = t;
    cycle_distance_ = 0.0;
    for (const Piece& p : pieces_) {
        cycle_distance_ += p.v0 * p.dur + 0.5 * p.accel * p.dur * p.dur;
    }
}

double SpeedSchedule::speed_at(double t) const {
    double tau = std::fmod(t, cycle_);
    if (tau < 0.0) tau += cycle_;
    for (const Piece& p : pieces_) {
        if (tau < p.t0 + p.dur) return p.v0 + p.accel * (tau - p.t0);
    }
    const Piece& last = pieces_.back();
    return last.v0 + last.accel * last.dur;
}

double SpeedSchedule::distance_into_cycle(double t) const {
    double acc = 0.0;
    for (const Piece& p : pieces_) {
        if (t <= p.t0) break;
        const double tau = std::min(t - p.t0, p.dur);
        acc += p.v0 * tau + 0.5 * p.accel * tau * tau;
    }
    return acc;
}

double SpeedSchedule::distance_between(double t0, double t1) const {
    if (t1 < t0) throw std::invalid_argument("SpeedSchedule::distance_between: t1 < t0");
    const double cycles0 = std::floor(t0 / cycle_);
    const double cycles1 = std::floor(t1 / cycle_);
    const double d0 = cycles0 * cycle_distance_ + distance_into_cycle(t0 - cycles0 * cycle_);
    const double d1 = cycles1 * cycle_distance_ + distance_into_cycle(t1 - cycles1 * cycle_);
    return d1 - d0;
}

Trajectory gen_trajectory(const Rect& bounds, const SpeedProfile& profile, double duration,
                          double dt, beammap::nn::Rng& rng) {
    if (dt <= 0.0 || duration < dt) {
        throw std::invalid_argument("gen_trajectory: need dt > 0 and duration >= dt");
    }
    if (bounds.width() <= 0.0 || bounds.height() <= 0.0) {
        throw std::invalid_argument("gen_trajectory: empty bounds");
    }
    SpeedSchedule sched(profile);
    const std::size_t steps = static_cast<std::size_t>(std::floor(duration / dt + 1e-9));

    Trajectory out;
    out.dt = dt;
    out.positions.reserve(steps + 1);
    out.timestamps.reserve(steps + 1);
    out.bounced.assign(steps, false);

    Vec2 p{rng.uniform(bounds.xmin, bounds.xmax), rng.uniform(bounds.ymin, bounds.ymax)};
    double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    out.positions.push_back(p);
    out.timestamps.push_back(0.0);

    const double wander = profile.heading_wander_std * std::sqrt(dt);
    for (std::size_t l = 0; l < steps; ++l) {
        if (wander > 0.0) heading += rng.normal(0.0, wander);
        const double t0 = static_cast<double>(l) * dt;
        double remaining = sched.distance_between(t0, t0 + dt);
        Vec2 u{std::cos(heading), std::sin(heading)};
        bool bounce = false;
        // Advance with specular reflection at the boundary; a step may bounce
        // more than once in a corner.
        while (remaining > 0.0) {
            double tx = std::numeric_limits<double>::infinity();
            double ty = std::numeric_limits<double>::infinity();
            if (u.x > 0.0) tx = (bounds.xmax - p.x) / u.x;
            else if (u.x < 0.0) tx = (bounds.xmin - p.x) / u.x;
            if (u.y > 0.0) ty = (bounds.ymax - p.y) / u.y;
            else if (u.y < 0.0) ty = (bounds.ymin - p.y) / u.y;
            const double th = std::min(tx, ty);
            if (th >= remaining) {
                p = p + u * remaining;
                remaining = 0.0;
            } else {
                p = p + u * th;
                remaining -= th;
                if (tx <= ty) u.x = -u.x;
                if (ty <= tx) u.y = -u.y;
                bounce = true;
            }
        }
        heading = std::atan2(u.y, u.x);
        // Clamp away float drift so positions always satisfy contains().
        p.x = std::min(std::max(p.x, bounds.xmin), bounds.xmax);
        p.y = std::min(std::max(p.y, bounds.ymin), bounds.ymax);
        out.positions.push_back(p);
        out.timestamps.push_back(t0 + dt);
        out.bounced[l] = bounce;
    }
    return out;
}

std::vector<Vec2> coarse_labels(const std::vector<Vec2>& positions, double sigma2,
                                beammap::nn::Rng& rng) {
    if (sigma2 < 0.0) throw std::invalid_argument("coarse_labels: negative variance");
    const double sigma = std::sqrt(sigma2);
    std::vector<Vec2> out;
    out.reserve(positions.size());
    for (Vec2 p : positions) {
        out.push_back({p.x + rng.normal(0.0, sigma), p.y + rng.normal(0.0, sigma)});
    }
    return out;
}

nlohmann::json profile_to_json(const SpeedProfile& p) {
    nlohmann::json j;
    j["initial_speed"] = p.initial_speed;
    j["heading_wander_std"] = p.heading_wander_std;
    auto segs = nlohmann::json::array();
    for (const SpeedSegment& s : p.segments) {
        const char* kind = s.kind == SpeedSegment::Kind::Constant     ? "constant"
                           : s.kind == SpeedSegment::Kind::Stop       ? "stop"
                                                                      : "accelerate";
        segs.push_back({{"kind", kind}, {"speed", s.speed}, {"duration", s.duration},
                        {"rate", s.rate}});
    }
    j["segments"] = std::move(segs);
    return j;
}

SpeedProfile profile_from_json(const nlohmann::json& j) {
    SpeedProfile p;
    p.initial_speed = j.at("initial_speed").get<double>();
    p.heading_wander_std = j.at("heading_wander_std").get<double>();
    for (const auto& s : j.at("segments")) {
        const std::string kind = s.at("kind").get<std::string>();
        if (kind == "constant") {
            p.segments.push_back(
                SpeedSegment::constant(s.at("speed").get<double>(), s.at("duration").get<double>()));
        } else if (kind == "stop") {
            p.segments.push_back(SpeedSegment::stop(s.at("duration").get<double>()));
        } else if (kind == "accelerate") {
            p.segments.push_back(
                SpeedSegment::accelerate(s.at("speed").get<double>(), s.at("rate").get<double>()));
        } else {
            throw std::runtime_error("profile_from_json: unknown segment kind '" + kind + "'");
        }
    }
    return p;
}

}  // namespace beammap::sim
