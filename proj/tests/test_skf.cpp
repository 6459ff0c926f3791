#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "beammap/nn/rng.hpp"
#include "beammap/rm/grid.hpp"
#include "beammap/skf/kalman.hpp"

using namespace beammap;
using sim::Vec2;

TEST_CASE("predict follows constant velocity kinematics") {
    skf::KalmanState s;
    s.x << 0, 0, 1, 0;
    s.P = Eigen::Matrix4d::Identity();
    const skf::KalmanState next = skf::kf_predict(s, 1.0, 0.5);
    CHECK(next.x(0) == doctest::Approx(1.0));
    CHECK(next.x(1) == doctest::Approx(0.0));
    CHECK(next.x(2) == doctest::Approx(1.0));
    CHECK(next.P.trace() > s.P.trace());  // process noise only adds uncertainty
    CHECK_THROWS_AS(skf::kf_predict(s, 0.0, 0.5), std::invalid_argument);
}

TEST_CASE("update reproduces the scalar bayes posterior") {
    skf::KalmanState s;  // prior N(0, 1) per axis, unit velocity variance
    const skf::KalmanState post = skf::kf_update(s, {2.0, 0.0}, 1.0);
    CHECK(post.x(0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(post.P(0, 0) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(post.x(1) == doctest::Approx(0.0));
    CHECK(post.P(1, 1) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(post.x(2) == doctest::Approx(0.0));  // no position-velocity coupling in the prior
    CHECK(post.P(2, 2) == doctest::Approx(1.0));
}

TEST_CASE("an uninformative observation leaves the state unchanged") {
    skf::KalmanState s;
    s.x << 3, -2, 0.5, 0.25;
    s.P = Eigen::Matrix4d::Identity() * 2.0;
    const skf::KalmanState post = skf::kf_update(s, {100.0, -100.0}, 1e9);
    CHECK((post.x - s.x).norm() < 1e-9);
    CHECK((post.P - s.P).norm() < 1e-6);
}

TEST_CASE("covariance stays symmetric positive definite over long runs") {
    nn::Rng rng(61);
    skf::KalmanState s = skf::kf_init({0, 0}, 5.0, 3.0);
    for (int i = 0; i < 10000; ++i) {
        s = skf::kf_predict(s, 1.0, 0.5);
        s = skf::kf_update(s, {rng.normal(0.0, 5.0), rng.normal(0.0, 5.0)}, 5.0);
        if (i % 500 == 0) {
            CHECK((s.P - s.P.transpose()).norm() < 1e-9);
            const Eigen::Vector4d ev = s.P.selfadjointView<Eigen::Lower>().eigenvalues();
            CHECK(ev.minCoeff() > 0.0);
        }
    }
}

TEST_CASE("kalman filter matches a brute force bayesian grid filter") {
    // The 4-state filter decouples per axis; check the x axis against a
    // discretized Bayes filter over (x, v).
    const double accel_std = 0.5, obs_std = 2.0, dt = 1.0;
    const int nx = 201, nv = 121;
    const double x_lo = -20.0, x_hi = 20.0, v_lo = -6.0, v_hi = 6.0;
    const double dx = (x_hi - x_lo) / (nx - 1), dv = (v_hi - v_lo) / (nv - 1);

    // white-acceleration process covariance and its inverse
    const double q = accel_std * accel_std;
    const double qxx = q * dt * dt * dt / 3.0, qxv = q * dt * dt / 2.0, qvv = q * dt;
    const double det = qxx * qvv - qxv * qxv;
    const double ixx = qvv / det, ixv = -qxv / det, ivv = qxx / det;

    std::vector<double> p(static_cast<std::size_t>(nx) * nv, 0.0);
    const auto at = [&](int ix, int iv) -> double& {
        return p[static_cast<std::size_t>(ix) * nv + iv];
    };

    nn::Rng rng(62);
    std::vector<double> obs;
    for (int l = 0; l < 12; ++l) obs.push_back(static_cast<double>(l) + rng.normal(0.0, obs_std));

    // shared prior: x ~ N(obs0, obs_std^2), v ~ N(0, 4)
    skf::KalmanState kf = skf::kf_init({obs[0], 0.0}, obs_std, 2.0);
    for (int ix = 0; ix < nx; ++ix) {
        for (int iv = 0; iv < nv; ++iv) {
            const double x = x_lo + ix * dx, v = v_lo + iv * dv;
            const double ex = (x - obs[0]) / obs_std, ev = v / 2.0;
            at(ix, iv) = std::exp(-0.5 * (ex * ex + ev * ev));
        }
    }

    double rms_diff = 0.0;
    int count = 0;
    for (std::size_t l = 1; l < obs.size(); ++l) {
        // grid predict: truncated transition kernel around (x + v dt, v)
        std::vector<double> next(p.size(), 0.0);
        const int wx = static_cast<int>(std::ceil(5.0 * std::sqrt(qxx) / dx));
        const int wv = static_cast<int>(std::ceil(5.0 * std::sqrt(qvv) / dv));
        for (int ix = 0; ix < nx; ++ix) {
            for (int iv = 0; iv < nv; ++iv) {
                const double mass = at(ix, iv);
                if (mass < 1e-14) continue;
                const double x = x_lo + ix * dx, v = v_lo + iv * dv;
                const double mx = x + v * dt;
                const int jx0 = static_cast<int>((mx - x_lo) / dx);
                for (int jx = std::max(0, jx0 - wx); jx <= std::min(nx - 1, jx0 + wx); ++jx) {
                    for (int jv = std::max(0, iv - wv); jv <= std::min(nv - 1, iv + wv); ++jv) {
                        const double ox = (x_lo + jx * dx) - mx;
                        const double ov = (v_lo + jv * dv) - v;
                        const double e = ixx * ox * ox + 2.0 * ixv * ox * ov + ivv * ov * ov;
                        next[static_cast<std::size_t>(jx) * nv + jv] +=
                            mass * std::exp(-0.5 * e);
                    }
                }
            }
        }
        p.swap(next);
        // grid update with the position likelihood
        double norm = 0.0;
        for (int ix = 0; ix < nx; ++ix) {
            const double x = x_lo + ix * dx;
            const double e = (x - obs[l]) / obs_std;
            const double like = std::exp(-0.5 * e * e);
            for (int iv = 0; iv < nv; ++iv) {
                at(ix, iv) *= like;
                norm += at(ix, iv);
            }
        }
        REQUIRE(norm > 0.0);
        for (double& m : p) m /= norm;
        double grid_mean = 0.0;
        for (int ix = 0; ix < nx; ++ix) {
            double row = 0.0;
            for (int iv = 0; iv < nv; ++iv) row += at(ix, iv);
            grid_mean += row * (x_lo + ix * dx);
        }

        kf = skf::kf_predict(kf, dt, accel_std);
        kf = skf::kf_update(kf, {obs[l], 0.0}, obs_std);
        rms_diff += (kf.x(0) - grid_mean) * (kf.x(0) - grid_mean);
        ++count;
    }
    rms_diff = std::sqrt(rms_diff / count);
    double rms_err = 0.0;
    for (std::size_t l = 1; l < obs.size(); ++l) rms_err += obs_std * obs_std;
    rms_err = std::sqrt(rms_err / count);
    CHECK(rms_diff < 0.02 * rms_err);
}

TEST_CASE("map fix is the brute force best matching cell") {
    const rm::GridMap grid{0, 0, 10, 3, 1};  // three cells along x
    const nn::Tensor map = nn::Tensor::matrix(3, 4, {
        1.0, 2.0, 3.0, 4.0,
        0.5, 2.5, 2.0, 3.0,
        2.0, 1.0, 0.5, 0.25});

    // exact full-mask match picks that row
    const std::vector<double> row1{0.5, 2.5, 2.0, 3.0};
    auto fix = skf::map_fix(row1, {0, 1, 2, 3}, map, grid);
    REQUIRE(fix.has_value());
    CHECK(fix->x == grid.center(1).x);

    // two observed beams: scan all cells by hand
    const std::vector<double> sparse{0.0, 2.4, 0.0, 2.9};
    const std::vector<std::size_t> mask{1, 3};
    double best = 1e300;
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        double d = 0.0;
        for (std::size_t i : mask) {
            const double diff = map.at(k, i) - sparse[i];
            d += diff * diff;
        }
        if (d < best) {
            best = d;
            best_k = k;
        }
    }
    fix = skf::map_fix(sparse, mask, map, grid);
    REQUIRE(fix.has_value());
    CHECK(fix->x == grid.center(best_k).x);
    CHECK(fix->y == grid.center(best_k).y);

    CHECK_FALSE(skf::map_fix(sparse, {}, map, grid).has_value());
}

TEST_CASE("tracking with near perfect coarse labels returns them") {
    const rm::GridMap grid{0, 0, 10, 2, 2};
    const nn::Tensor map = nn::Tensor::zeros({4, 4});
    std::vector<Vec2> coarse;
    for (int l = 0; l < 20; ++l) coarse.push_back({1.0 + l, 2.0 + 0.5 * l});
    const std::vector<std::vector<double>> values(20, std::vector<double>(4, 0.0));
    const std::vector<std::vector<std::size_t>> masks(20);  // no fixes

    skf::SkfConfig cfg;
    cfg.obs_std_coarse = 1e-6;
    const auto out = skf::track(coarse, values, masks, map, grid, 1.0, cfg);
    REQUIRE(out.size() == 20);
    for (std::size_t l = 0; l < 20; ++l) {
        CHECK(std::abs(out[l].x - coarse[l].x) < 1e-5);
        CHECK(std::abs(out[l].y - coarse[l].y) < 1e-5);
    }
}

TEST_CASE("rms error of a static target decreases over time") {
    const rm::GridMap grid{0, 0, 10, 2, 2};
    const nn::Tensor map = nn::Tensor::zeros({4, 4});
    const std::vector<std::vector<double>> values(30, std::vector<double>(4, 0.0));
    const std::vector<std::vector<std::size_t>> masks(30);
    skf::SkfConfig cfg;
    cfg.obs_std_coarse = 3.0;
    cfg.process_accel_std = 0.1;

    nn::Rng rng(63);
    std::vector<double> win(3, 0.0);
    const int runs = 200;
    for (int r = 0; r < runs; ++r) {
        std::vector<Vec2> coarse;
        for (int l = 0; l < 30; ++l) {
            coarse.push_back({5.0 + rng.normal(0.0, 3.0), 5.0 + rng.normal(0.0, 3.0)});
        }
        const auto out = skf::track(coarse, values, masks, map, grid, 1.0, cfg);
        for (int l = 0; l < 30; ++l) {
            const double dxe = out[l].x - 5.0, dye = out[l].y - 5.0;
            win[l / 10] += dxe * dxe + dye * dye;
        }
    }
    for (double& w : win) w = std::sqrt(w / (10.0 * runs));
    CHECK(win[1] < win[0]);
    CHECK(win[2] < win[1] + 0.05);
}

TEST_CASE("map fixes reduce tracking error under heavy coarse noise") {
    // five distinctive cells along x; the walker crosses them left to right
    const rm::GridMap grid{0, 0, 10, 5, 1};
    nn::Tensor map({5, 3});
    for (std::size_t k = 0; k < 5; ++k) {
        map.at(k, 0) = static_cast<double>(k);
        map.at(k, 1) = 10.0 - 2.0 * static_cast<double>(k);
        map.at(k, 2) = static_cast<double>(k * k);
    }
    nn::Rng rng(64);
    double err_fix = 0.0, err_plain = 0.0;
    for (int run = 0; run < 20; ++run) {
        std::vector<Vec2> truth, coarse;
        std::vector<std::vector<double>> values;
        std::vector<std::vector<std::size_t>> masks, empty_masks;
        for (int l = 0; l < 25; ++l) {
            const Vec2 p{2.0 * l + 1.0, 5.0};
            truth.push_back(p);
            coarse.push_back({p.x + rng.normal(0.0, 8.0), p.y + rng.normal(0.0, 8.0)});
            const std::size_t k = grid.nearest_cell(p);
            values.push_back({map.at(k, 0), map.at(k, 1), map.at(k, 2)});
            masks.push_back({0, 1, 2});
            empty_masks.push_back({});
        }
        skf::SkfConfig cfg;
        cfg.obs_std_coarse = 8.0;
        const auto with_fix = skf::track(coarse, values, masks, map, grid, 1.0, cfg);
        const auto plain = skf::track(coarse, values, empty_masks, map, grid, 1.0, cfg);
        for (int l = 0; l < 25; ++l) {
            err_fix += sim::dist(with_fix[l], truth[l]);
            err_plain += sim::dist(plain[l], truth[l]);
        }
    }
    CHECK(err_fix < err_plain);
}
