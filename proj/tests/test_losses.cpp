#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "beammap/loss/losses.hpp"
#include "beammap/rm/assign.hpp"

#include "helpers.hpp"

using namespace beammap;
using testutil::fd_max_rel;
using testutil::rand_tensor;

namespace {

double value_of(nn::Graph& g, nn::Var v) { return g.value(v)[0]; }

}  // namespace

TEST_CASE("coarse loss is the mean euclidean gap") {
    nn::Graph g;
    const nn::Tensor same = nn::Tensor::matrix(2, 2, {1, 2, 3, 4});
    CHECK(value_of(g, loss::loss_coarse(g, g.constant(same), same)) == 0.0);

    nn::Graph g2;
    const nn::Tensor p = nn::Tensor::matrix(1, 2, {0, 0});
    const nn::Tensor q = nn::Tensor::matrix(1, 2, {3, 4});
    CHECK(value_of(g2, loss::loss_coarse(g2, g2.constant(p), q)) == doctest::Approx(5.0));

    nn::Graph g3;
    const nn::Tensor a = nn::Tensor::matrix(2, 2, {0, 0, 0, 0});
    const nn::Tensor b = nn::Tensor::matrix(2, 2, {1, 0, 0, 3});
    CHECK(value_of(g3, loss::loss_coarse(g3, g3.constant(a), b)) == doctest::Approx(2.0));

    nn::Graph g4;
    CHECK_THROWS_AS(loss::loss_coarse(g4, g4.constant(a), q), std::invalid_argument);
}

TEST_CASE("self train loss is a kl divergence in nats") {
    nn::Graph g;
    const nn::Tensor r = nn::Tensor::matrix(1, 2, {0.9, 0.1});
    const nn::Tensor p = nn::Tensor::matrix(1, 2, {0.972, 0.028});
    const double expected = 0.972 * std::log(0.972 / 0.9) + 0.028 * std::log(0.028 / 0.1);
    CHECK(value_of(g, loss::loss_selftrain(g, g.constant(r), p)) ==
          doctest::Approx(expected).epsilon(1e-9));
    CHECK(expected == doctest::Approx(0.0391).epsilon(0.01));

    nn::Graph g2;
    CHECK(value_of(g2, loss::loss_selftrain(g2, g2.constant(p), p)) == doctest::Approx(0.0));

    // Gibbs: nonnegative against its own sharpened target
    nn::Rng rng(3);
    for (int it = 0; it < 20; ++it) {
        nn::Tensor soft = rand_tensor({4, 6}, rng, 0.01, 1.0);
        for (std::size_t i = 0; i < 4; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < 6; ++j) s += soft.at(i, j);
            for (std::size_t j = 0; j < 6; ++j) soft.at(i, j) /= s;
        }
        const nn::Tensor target = rm::target_distribution(soft);
        nn::Graph gi;
        CHECK(value_of(gi, loss::loss_selftrain(gi, gi.constant(soft), target)) >= -1e-12);
    }
}

TEST_CASE("triplet enumeration follows the coherence window") {
    const auto t = loss::build_triplets({0.0, 1.0, 5.0}, 2.0);
    REQUIRE(t.size() == 2);
    CHECK(t[0].anchor == 0);
    CHECK(t[0].close == 1);
    CHECK(t[0].far == 2);
    CHECK(t[1].anchor == 1);
    CHECK(t[1].close == 0);
    CHECK(t[1].far == 2);

    CHECK(loss::build_triplets({0.0, 1.0, 2.0}, 5.0).empty());  // nothing is far
    CHECK(loss::build_triplets({0.0}, 1.0).empty());
    CHECK_THROWS_AS(loss::build_triplets({0.0, 1.0}, 0.0), std::invalid_argument);
}

TEST_CASE("triplet subsampling is a deterministic subset") {
    std::vector<double> ts;
    for (int i = 0; i < 30; ++i) ts.push_back(i);
    auto all = loss::build_triplets(ts, 2.0);
    REQUIRE(all.size() > 100);

    nn::Rng r1(7), r2(7);
    const auto s1 = loss::subsample_triplets(all, 50, r1);
    const auto s2 = loss::subsample_triplets(all, 50, r2);
    REQUIRE(s1.size() == 50);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(s1[i].anchor == s2[i].anchor);
        CHECK(s1[i].close == s2[i].close);
        CHECK(s1[i].far == s2[i].far);
        const bool member = std::any_of(all.begin(), all.end(), [&](const loss::Triplet& t) {
            return t.anchor == s1[i].anchor && t.close == s1[i].close && t.far == s1[i].far;
        });
        CHECK(member);
    }
    nn::Rng r3(8);
    CHECK(loss::subsample_triplets(all, all.size() + 10, r3).size() == all.size());
}

TEST_CASE("triplet hinge worked examples") {
    const nn::Tensor rows = nn::Tensor::matrix(3, 2, {0, 0, 2, 0, 1, 0});
    nn::Graph g;
    // |a-c| = 2, |a-f| = 1, margin 0.5 -> 1.5
    CHECK(value_of(g, loss::loss_triplet(g, g.constant(rows), {{0, 1, 2}}, 0.5)) ==
          doctest::Approx(1.5));
    nn::Graph g2;
    // |a-c| = 1, |a-f| = 2, margin 0.5 -> inactive
    CHECK(value_of(g2, loss::loss_triplet(g2, g2.constant(rows), {{0, 2, 1}}, 0.5)) ==
          doctest::Approx(0.0));
    nn::Graph g3;
    CHECK(value_of(g3, loss::loss_triplet(g3, g3.constant(rows), {}, 0.5)) == 0.0);

    // translation invariance
    nn::Tensor shifted = rows;
    for (std::size_t i = 0; i < 3; ++i) {
        shifted.at(i, 0) += 11.0;
        shifted.at(i, 1) -= 4.0;
    }
    nn::Graph g4, g5;
    const std::vector<loss::Triplet> both{{0, 1, 2}, {0, 2, 1}};
    CHECK(value_of(g4, loss::loss_triplet(g4, g4.constant(rows), both, 0.5)) ==
          doctest::Approx(value_of(g5, loss::loss_triplet(g5, g5.constant(shifted), both, 0.5))));
}

TEST_CASE("dynamics loss measures second difference energy") {
    nn::Graph g;
    const nn::Tensor line = nn::Tensor::matrix(4, 2, {0, 0, 1, 1, 2, 2, 3, 3});
    CHECK(value_of(g, loss::loss_dynamics(g, g.constant(line))) == doctest::Approx(0.0));

    nn::Graph g2;
    const nn::Tensor kink = nn::Tensor::matrix(3, 2, {0, 0, 0, 0, 1, 0});
    CHECK(value_of(g2, loss::loss_dynamics(g2, g2.constant(kink))) == doctest::Approx(1.0));

    nn::Graph g3;
    nn::Tensor moved = kink;
    for (std::size_t i = 0; i < 3; ++i) {
        moved.at(i, 0) += 5.0;
        moved.at(i, 1) += 7.0;
    }
    CHECK(value_of(g3, loss::loss_dynamics(g3, g3.constant(moved))) == doctest::Approx(1.0));

    // rotation invariance: rotate the kink by 30 degrees
    nn::Graph g4;
    const double c = std::cos(0.5236), s = std::sin(0.5236);
    nn::Tensor rot({3, 2});
    for (std::size_t i = 0; i < 3; ++i) {
        rot.at(i, 0) = c * kink.at(i, 0) - s * kink.at(i, 1);
        rot.at(i, 1) = s * kink.at(i, 0) + c * kink.at(i, 1);
    }
    CHECK(value_of(g4, loss::loss_dynamics(g4, g4.constant(rot))) == doctest::Approx(1.0));

    // fewer than three rows has no interior point
    nn::Graph g5;
    CHECK(value_of(g5, loss::loss_dynamics(g5, g5.constant(nn::Tensor::zeros({2, 2})))) == 0.0);
    nn::Graph g6;
    CHECK(value_of(g6, loss::loss_dynamics(g6, g6.constant(nn::Tensor::zeros({1, 2})))) == 0.0);
}

TEST_CASE("recon loss sums denoising and commitment terms") {
    nn::Graph g;
    const nn::Tensor noise = nn::Tensor::matrix(1, 1, {0.0});
    nn::Var noise_hat = g.constant(nn::Tensor::matrix(1, 1, {2.0}));
    nn::Var zhat = g.leaf(nn::Tensor::matrix(1, 1, {1.0}));
    nn::Var zq = g.leaf(nn::Tensor::matrix(1, 1, {2.0}));
    nn::Var l = loss::loss_recon(g, noise, noise_hat, zhat, zq, true);
    CHECK(value_of(g, l) == doctest::Approx(5.0));

    g.backward(l);
    // EMA codebook: commitment pulls the encoder, never the table
    CHECK(g.grad(zhat)[0] == doctest::Approx(2.0 * (1.0 - 2.0)));
    CHECK(g.grad(zq)[0] == 0.0);

    nn::Graph g2;
    nn::Var zhat2 = g2.leaf(nn::Tensor::matrix(1, 1, {1.0}));
    nn::Var zq2 = g2.leaf(nn::Tensor::matrix(1, 1, {2.0}));
    nn::Var nh2 = g2.constant(nn::Tensor::matrix(1, 1, {2.0}));
    nn::Var l2 = loss::loss_recon(g2, noise, nh2, zhat2, zq2, false);
    g2.backward(l2);
    CHECK(g2.grad(zhat2)[0] == 0.0);
    CHECK(g2.grad(zq2)[0] == doctest::Approx(2.0 * (2.0 - 1.0)));

    nn::Graph g3;
    nn::Var z3 = g3.leaf(nn::Tensor::matrix(1, 1, {1.0}));
    CHECK(value_of(g3, loss::loss_recon(g3, noise, g3.constant(noise), z3, z3, true)) == 0.0);
}

TEST_CASE("total loss applies the published weights") {
    const auto unit = [](nn::Graph& g) { return g.constant(nn::Tensor::scalar(1.0)); };
    nn::Graph g;
    loss::LossWeights outdoor{0.01, 1.0, 50.0};
    CHECK(value_of(g, loss::loss_total(g, unit(g), unit(g), unit(g), unit(g), unit(g), outdoor)) ==
          doctest::Approx(53.01));

    nn::Graph g2;
    loss::LossWeights indoor{0.01, 5.0, 2.0};
    CHECK(value_of(g2, loss::loss_total(g2, unit(g2), unit(g2), unit(g2), unit(g2), unit(g2),
                                        indoor)) == doctest::Approx(9.01));

    nn::Graph g3;
    nn::Var bad = g3.constant(nn::Tensor::scalar(std::numeric_limits<double>::quiet_NaN()));
    CHECK_THROWS_WITH_AS(
        loss::loss_total(g3, unit(g3), unit(g3), unit(g3), bad, unit(g3), outdoor),
        "loss_total: non-finite triplet term", std::runtime_error);
}

TEST_CASE("every loss gradient matches finite differences") {
    nn::Rng rng(9);
    const nn::Tensor phat = rand_tensor({5, 2}, rng, 0.0, 4.0);
    const nn::Tensor coarse = rand_tensor({5, 2}, rng, 0.0, 4.0);
    const nn::Tensor target = rm::target_distribution(nn::Tensor::matrix(2, 3, {
        0.5, 0.3, 0.2, 0.1, 0.6, 0.3}));
    const nn::Tensor logits = rand_tensor({2, 3}, rng);
    const nn::Tensor noise = rand_tensor({3, 4}, rng);
    const nn::Tensor nh = rand_tensor({3, 4}, rng);
    const nn::Tensor zh = rand_tensor({3, 2}, rng);
    const nn::Tensor zq = rand_tensor({3, 2}, rng);
    const std::vector<loss::Triplet> triplets{{0, 1, 3}, {2, 1, 4}, {4, 3, 0}};

    CHECK(fd_max_rel([&](nn::Graph& g, const std::vector<nn::Var>& v) {
              return loss::loss_coarse(g, v[0], coarse);
          }, {phat}) < 1e-4);

    CHECK(fd_max_rel([&](nn::Graph& g, const std::vector<nn::Var>& v) {
              return loss::loss_selftrain(g, g.softmax_rows(v[0]), target);
          }, {logits}) < 1e-4);

    CHECK(fd_max_rel([&](nn::Graph& g, const std::vector<nn::Var>& v) {
              return loss::loss_triplet(g, v[0], triplets, 0.75);
          }, {phat}) < 1e-4);

    CHECK(fd_max_rel([&](nn::Graph& g, const std::vector<nn::Var>& v) {
              return loss::loss_dynamics(g, v[0]);
          }, {phat}) < 1e-4);

    CHECK(fd_max_rel([&](nn::Graph& g, const std::vector<nn::Var>& v) {
              return loss::loss_recon(g, noise, v[0], v[1], g.constant(zq), true);
          }, {nh, zh}) < 1e-4);

    CHECK(fd_max_rel([&](nn::Graph& g, const std::vector<nn::Var>& v) {
              return loss::loss_recon(g, noise, v[0], g.constant(zh), v[1], false);
          }, {nh, zq}) < 1e-4);

    CHECK(fd_max_rel([&](nn::Graph& g, const std::vector<nn::Var>& v) {
              nn::Var s = loss::loss_coarse(g, v[0], coarse);
              nn::Var r = loss::loss_dynamics(g, v[0]);
              nn::Var c = loss::loss_triplet(g, v[0], triplets, 0.75);
              return loss::loss_total(g, s, r, c, s, r, {0.01, 1.0, 50.0});
          }, {phat}) < 1e-4);
}
