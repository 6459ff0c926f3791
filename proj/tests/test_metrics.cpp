#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "beammap/met/metrics.hpp"
#include "beammap/nn/rng.hpp"

using namespace beammap;
using sim::Vec2;

namespace {

// Exhaustive rank-based oracle. Neighbor order sorts by (distance, index).
std::vector<std::size_t> knn(const std::vector<Vec2>& pts, std::size_t l, std::size_t k) {
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < pts.size(); ++j) {
        if (j != l) order.push_back(j);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double da = sim::dist(pts[l], pts[a]), db = sim::dist(pts[l], pts[b]);
        if (da != db) return da < db;
        return a < b;
    });
    order.resize(k);
    return order;
}

std::size_t rank_of(const std::vector<Vec2>& pts, std::size_t l, std::size_t j) {
    std::size_t r = 0;
    const double dj = sim::dist(pts[l], pts[j]);
    for (std::size_t m = 0; m < pts.size(); ++m) {
        if (m == l || m == j) continue;
        const double dm = sim::dist(pts[l], pts[m]);
        if (dm < dj || (dm == dj && m < j)) ++r;
    }
    return r + 1;  // 1-based neighbor rank
}

double tw_oracle(const std::vector<Vec2>& truth, const std::vector<Vec2>& pred, std::size_t k) {
    const std::size_t n = truth.size();
    double penalty = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        const auto v_true = knn(truth, l, k);
        const auto v_pred = knn(pred, l, k);
        for (std::size_t j : v_pred) {
            if (std::find(v_true.begin(), v_true.end(), j) == v_true.end()) {
                penalty += static_cast<double>(rank_of(truth, l, j)) - static_cast<double>(k);
            }
        }
    }
    const double nn = static_cast<double>(n), kk = static_cast<double>(k);
    return 1.0 - 2.0 / (nn * kk * (2.0 * nn - 3.0 * kk - 1.0)) * penalty;
}

double ct_oracle(const std::vector<Vec2>& truth, const std::vector<Vec2>& pred, std::size_t k) {
    const std::size_t n = truth.size();
    double penalty = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        const auto v_true = knn(truth, l, k);
        const auto v_pred = knn(pred, l, k);
        for (std::size_t j : v_true) {
            if (std::find(v_pred.begin(), v_pred.end(), j) == v_pred.end()) {
                penalty += static_cast<double>(rank_of(pred, l, j)) - static_cast<double>(k);
            }
        }
    }
    const double nn = static_cast<double>(n), kk = static_cast<double>(k);
    return 1.0 - 2.0 / (nn * kk * (2.0 * nn - 3.0 * kk - 1.0)) * penalty;
}

std::vector<Vec2> random_points(std::size_t n, nn::Rng& rng) {
    std::vector<Vec2> pts(n);
    for (auto& p : pts) p = {rng.uniform(0.0, 50.0), rng.uniform(0.0, 50.0)};
    return pts;
}

}  // namespace

TEST_CASE("mean error and percentile") {
    const std::vector<Vec2> truth{{0, 0}, {1, 1}, {2, 2}};
    CHECK(met::mean_error(truth, truth) == 0.0);

    const std::vector<Vec2> pred{{3, 0}, {1, 5}, {5, 6}};  // distances 3, 4, 5
    CHECK(met::mean_error(truth, pred) == doctest::Approx(4.0));
    CHECK_THROWS_AS(met::mean_error(truth, {{0, 0}}), std::invalid_argument);

    CHECK(met::percentile95(std::vector<double>(20, 7.5)) == 7.5);
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    CHECK(met::percentile95(v) == 95.0);
    CHECK(met::percentile95({42.0}) == 42.0);
    std::vector<double> w(19);
    std::iota(w.begin(), w.end(), 1.0);
    CHECK(met::percentile95(w) == 19.0);  // ceil(18.05) = 19 -> last element
    CHECK_THROWS_AS(met::percentile95({}), std::invalid_argument);

    // shuffled input gives the same percentile
    std::vector<double> shuffled{5, 1, 4, 2, 3, 9, 8, 7, 6, 10, 15, 12, 11, 14, 13, 20, 17, 16,
                                 19, 18};
    CHECK(met::percentile95(shuffled) == 19.0);
}

TEST_CASE("perfect and rigid motion predictions score unit tw and ct") {
    nn::Rng rng(71);
    const auto truth = random_points(25, rng);
    CHECK(met::trustworthiness(truth, truth, 5) == doctest::Approx(1.0));
    CHECK(met::continuity(truth, truth, 5) == doctest::Approx(1.0));

    const double c = std::cos(0.7), s = std::sin(0.7);
    std::vector<Vec2> moved;
    for (const Vec2& p : truth) moved.push_back({c * p.x - s * p.y + 40.0, s * p.x + c * p.y - 9.0});
    CHECK(met::trustworthiness(truth, moved, 5) == doctest::Approx(1.0));
    CHECK(met::continuity(truth, moved, 5) == doctest::Approx(1.0));
}

TEST_CASE("four collinear points with a swap match the oracle") {
    const std::vector<Vec2> truth{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
    std::vector<Vec2> pred = truth;
    std::swap(pred[1], pred[2]);
    CHECK(met::trustworthiness(truth, pred, 1) ==
          doctest::Approx(tw_oracle(truth, pred, 1)).epsilon(1e-12));
    CHECK(met::continuity(truth, pred, 1) ==
          doctest::Approx(ct_oracle(truth, pred, 1)).epsilon(1e-12));
}

TEST_CASE("tw and ct match exhaustive oracles on 100 random instances") {
    nn::Rng rng(73);
    for (int it = 0; it < 100; ++it) {
        const std::size_t n = 8 + rng.uniform_index(23);  // 8..30
        const std::size_t k_max = (n - 1) / 2;
        const std::size_t k = 1 + rng.uniform_index(std::max<std::size_t>(1, k_max - 1));
        auto truth = random_points(n, rng);
        auto pred = truth;
        // perturb a random subset to scramble some neighborhoods
        for (auto& p : pred) {
            if (rng.uniform() < 0.5) {
                p.x += rng.normal(0.0, 8.0);
                p.y += rng.normal(0.0, 8.0);
            }
        }
        const double tw = met::trustworthiness(truth, pred, k);
        const double ct = met::continuity(truth, pred, k);
        CHECK(std::abs(tw - tw_oracle(truth, pred, k)) < 1e-12);
        CHECK(std::abs(ct - ct_oracle(truth, pred, k)) < 1e-12);
        CHECK(std::abs(ct - met::trustworthiness(pred, truth, k)) < 1e-12);  // duality
        CHECK(tw <= 1.0 + 1e-12);
        CHECK(ct <= 1.0 + 1e-12);
    }
}

TEST_CASE("tw handles integer grids where distances tie") {
    std::vector<Vec2> truth;
    for (int x = 0; x < 4; ++x) {
        for (int y = 0; y < 4; ++y) truth.push_back({static_cast<double>(x), static_cast<double>(y)});
    }
    std::vector<Vec2> pred = truth;
    std::swap(pred[0], pred[15]);
    for (std::size_t k : {std::size_t{1}, std::size_t{3}, std::size_t{6}}) {
        CHECK(std::abs(met::trustworthiness(truth, pred, k) - tw_oracle(truth, pred, k)) < 1e-12);
        CHECK(std::abs(met::continuity(truth, pred, k) - ct_oracle(truth, pred, k)) < 1e-12);
    }
}

TEST_CASE("neighborhood size bounds are enforced") {
    nn::Rng rng(74);
    const auto pts = random_points(10, rng);
    CHECK_THROWS_AS(met::trustworthiness(pts, pts, 0), std::invalid_argument);
    CHECK_THROWS_AS(met::trustworthiness(pts, pts, 5), std::invalid_argument);  // needs k < 4.5
    CHECK_THROWS_AS(met::continuity(pts, pts, 9), std::invalid_argument);
}

TEST_CASE("map error normalizes by the true range") {
    const nn::Tensor truth = nn::Tensor::matrix(2, 2, {0.0, 1.0, 0.5, 0.25});
    nn::Tensor pred = truth;
    pred[0] += 0.1;
    const met::MapError e = met::map_error(pred, truth);
    CHECK(e.rmse == doctest::Approx(0.05));
    CHECK(e.nmse == doctest::Approx(0.01 / 1.3125));

    const met::MapError zero = met::map_error(truth, truth);
    CHECK(zero.rmse == 0.0);
    CHECK(zero.nmse == 0.0);

    // scaling both maps together leaves the normalized error unchanged
    nn::Tensor truth_scaled = truth, pred_scaled = pred;
    for (std::size_t i = 0; i < truth.numel(); ++i) {
        truth_scaled[i] *= 37.0;
        pred_scaled[i] *= 37.0;
    }
    const met::MapError es = met::map_error(pred_scaled, truth_scaled);
    CHECK(es.rmse == doctest::Approx(0.05));

    // row subset restricts the comparison
    const met::MapError sub = met::map_error(pred, truth, {1});
    CHECK(sub.rmse == doctest::Approx(0.0));

    CHECK_THROWS_AS(met::map_error(pred, nn::Tensor::full({2, 2}, 3.0)), std::domain_error);
    CHECK_THROWS_AS(met::map_error(nn::Tensor::zeros({1, 2}), truth), std::invalid_argument);
}

TEST_CASE("capacity follows the log law") {
    const std::vector<std::complex<double>> h{{1.0, 0.0}};
    const std::vector<std::complex<double>> w{{1.0, 0.0}};
    CHECK(met::capacity(h, w, 3.0, 1.0) == doctest::Approx(2.0));
    CHECK(met::capacity(h, w, 1.0, 1.0) == doctest::Approx(1.0));
    const std::vector<std::complex<double>> z{{0.0, 0.0}};
    CHECK(met::capacity(z, w, 5.0, 1.0) == 0.0);
    CHECK(met::capacity(h, w, 2.0, 1.0) > met::capacity(h, w, 1.0, 1.0));
    CHECK_THROWS_AS(met::capacity(h, w, 1.0, 0.0), std::invalid_argument);

    // phase alignment: |h^H w|^2 uses the coherent inner product
    const std::vector<std::complex<double>> hi{{0.0, 1.0}};
    CHECK(met::capacity(hi, hi, 1.0, 1.0) == doctest::Approx(1.0));
}
