#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "beammap/diff/denoiser.hpp"
#include "beammap/diff/sampler.hpp"
#include "beammap/diff/schedule.hpp"
#include "beammap/loss/losses.hpp"
#include "beammap/nn/optim.hpp"

#include "helpers.hpp"

using namespace beammap;
using testutil::rand_tensor;

TEST_CASE("schedule worked example") {
    const diff::DiffusionSchedule s = diff::make_schedule(2, 1e-4, 0.02);
    REQUIRE(s.steps() == 2);
    CHECK(s.eta[0] == doctest::Approx(1e-4));
    CHECK(s.eta[1] == doctest::Approx(0.02));
    CHECK(s.alpha_bar[0] == doctest::Approx(0.9999));
    CHECK(s.alpha_bar[1] == doctest::Approx(0.979902));
    // t = 2: sigma^2 = (1 - abar_1)/(1 - abar_2) * eta_2
    const double sigma = diff::reverse_sigma(2, s);
    CHECK(sigma * sigma == doctest::Approx(9.951e-5).epsilon(1e-4));
    CHECK(diff::reverse_sigma(1, s) == 0.0);
}

TEST_CASE("schedule is linear and alpha_bar is the running product") {
    const diff::DiffusionSchedule s = diff::make_schedule(50, 1e-4, 0.02);
    REQUIRE(s.steps() == 50);
    double prod = 1.0;
    for (std::size_t t = 1; t <= 50; ++t) {
        const double expected_eta = 1e-4 + (0.02 - 1e-4) * static_cast<double>(t - 1) / 49.0;
        CHECK(std::abs(s.eta[t - 1] - expected_eta) < 1e-15);
        CHECK(s.alpha[t - 1] == doctest::Approx(1.0 - s.eta[t - 1]));
        prod *= s.alpha[t - 1];
        CHECK(std::abs(s.alpha_bar[t - 1] - prod) < 1e-15);
    }
    CHECK_THROWS_AS(diff::make_schedule(0, 1e-4, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(diff::make_schedule(10, 0.02, 1e-4), std::invalid_argument);
    CHECK_THROWS_AS(diff::make_schedule(10, 1e-4, 1.5), std::invalid_argument);
}

TEST_CASE("forward sample worked example") {
    diff::DiffusionSchedule s;
    s.eta = {0.75};
    s.alpha = {0.25};
    s.alpha_bar = {0.25};
    const nn::Tensor g0 = nn::Tensor::matrix(1, 1, {2.0});
    const nn::Tensor eps = nn::Tensor::matrix(1, 1, {1.0});
    const nn::Tensor gt = diff::forward_sample(g0, 1, eps, s);
    CHECK(gt[0] == doctest::Approx(1.8660254).epsilon(1e-7));
    CHECK_THROWS_AS(diff::forward_sample(g0, 0, eps, s), std::invalid_argument);
    CHECK_THROWS_AS(diff::forward_sample(g0, 2, eps, s), std::invalid_argument);
}

TEST_CASE("forward marginals match the schedule moments") {
    const diff::DiffusionSchedule s = diff::make_schedule(50, 1e-4, 0.02);
    const std::size_t t = 30;
    const nn::Tensor g0 = nn::Tensor::matrix(1, 2, {1.5, -0.7});
    nn::Rng rng(19);
    double m0 = 0.0, m1 = 0.0, v0 = 0.0, v1 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        nn::Tensor eps({1, 2});
        eps[0] = rng.normal();
        eps[1] = rng.normal();
        const nn::Tensor gt = diff::forward_sample(g0, t, eps, s);
        m0 += gt[0];
        m1 += gt[1];
        v0 += gt[0] * gt[0];
        v1 += gt[1] * gt[1];
    }
    m0 /= n;
    m1 /= n;
    v0 = v0 / n - m0 * m0;
    v1 = v1 / n - m1 * m1;
    const double abar = s.alpha_bar[t - 1];
    CHECK(std::abs(m0 - std::sqrt(abar) * 1.5) < 0.02 * std::abs(std::sqrt(abar) * 1.5));
    CHECK(std::abs(m1 - std::sqrt(abar) * -0.7) < 0.02 * std::abs(std::sqrt(abar) * 0.7));
    CHECK(std::abs(v0 - (1.0 - abar)) < 0.02 * (1.0 - abar));
    CHECK(std::abs(v1 - (1.0 - abar)) < 0.02 * (1.0 - abar));
}

TEST_CASE("posterior mean agrees with the two parameter form") {
    // mu = sqrt(abar_{t-1}) eta_t / (1-abar_t) * x0hat
    //    + sqrt(alpha_t) (1-abar_{t-1}) / (1-abar_t) * g_t
    const diff::DiffusionSchedule s = diff::make_schedule(50, 1e-4, 0.02);
    nn::Rng rng(23);
    for (std::size_t t : {std::size_t{2}, std::size_t{17}, std::size_t{50}}) {
        const nn::Tensor gt = rand_tensor({1, 4}, rng);
        const nn::Tensor eps_hat = rand_tensor({1, 4}, rng);
        const nn::Tensor mean = diff::posterior_mean(gt, t, eps_hat, s);
        const double abar_t = s.alpha_bar[t - 1];
        const double abar_p = s.alpha_bar[t - 2];
        const double alpha_t = s.alpha[t - 1];
        const double eta_t = s.eta[t - 1];
        for (std::size_t j = 0; j < 4; ++j) {
            const double x0hat = (gt[j] - std::sqrt(1.0 - abar_t) * eps_hat[j]) / std::sqrt(abar_t);
            const double mu = std::sqrt(abar_p) * eta_t / (1.0 - abar_t) * x0hat +
                              std::sqrt(alpha_t) * (1.0 - abar_p) / (1.0 - abar_t) * gt[j];
            CHECK(std::abs(mean[j] - mu) < 1e-10);
        }
    }
}

TEST_CASE("time embedding is a stable sinusoidal code") {
    const auto e1 = diff::time_embedding({1, 25, 50}, 8);
    REQUIRE(e1.rows() == 3);
    REQUIRE(e1.cols() == 8);
    for (std::size_t i = 0; i < e1.numel(); ++i) {
        CHECK(e1[i] <= 1.0);
        CHECK(e1[i] >= -1.0);
    }
    const auto e2 = diff::time_embedding({1, 25, 50}, 8);
    for (std::size_t i = 0; i < e1.numel(); ++i) CHECK(e1[i] == e2[i]);
    // distinct steps produce distinct codes
    double diff01 = 0.0;
    for (std::size_t j = 0; j < 8; ++j) diff01 += std::abs(e1.at(0, j) - e1.at(1, j));
    CHECK(diff01 > 1e-3);
    CHECK_THROWS_AS(diff::time_embedding({1}, 7), std::invalid_argument);
}

TEST_CASE("denoiser rows are independent of batch composition") {
    diff::DenoiserConfig dc;
    dc.g_dim = 3;
    dc.cond_dim = 2;
    dc.width = 16;
    dc.hidden_layers = 2;
    dc.time_dim = 4;
    const diff::Denoiser dn(dc);
    nn::ParamStore ps;
    nn::Rng rng(31);
    dn.init_params(ps, rng);
    const diff::DiffusionSchedule s = diff::make_schedule(10, 1e-4, 0.02);

    nn::Rng rng2(32);
    const nn::Tensor gt = rand_tensor({4, 3}, rng2);
    const nn::Tensor cond = rand_tensor({4, 2}, rng2);
    nn::Graph g;
    const nn::Tensor full =
        g.value(dn.forward(g, ps, g.constant(gt), g.constant(cond), {1, 4, 7, 10}, s));
    REQUIRE(full.rows() == 4);
    REQUIRE(full.cols() == 3);

    const std::vector<std::size_t> ts{1, 4, 7, 10};
    for (std::size_t r = 0; r < 4; ++r) {
        nn::Tensor gr({1, 3}), cr({1, 2});
        for (std::size_t j = 0; j < 3; ++j) gr.at(0, j) = gt.at(r, j);
        for (std::size_t j = 0; j < 2; ++j) cr.at(0, j) = cond.at(r, j);
        nn::Graph g1;
        const nn::Tensor one =
            g1.value(dn.forward(g1, ps, g1.constant(gr), g1.constant(cr), {ts[r]}, s));
        for (std::size_t j = 0; j < 3; ++j) CHECK(one.at(0, j) == full.at(r, j));
    }
}

TEST_CASE("batched generation equals row by row generation bitwise") {
    diff::DenoiserConfig dc;
    dc.g_dim = 2;
    dc.cond_dim = 2;
    dc.width = 16;
    dc.hidden_layers = 2;
    dc.time_dim = 4;
    const diff::Denoiser dn(dc);
    nn::ParamStore ps;
    nn::Rng rng(37);
    dn.init_params(ps, rng);
    const diff::DiffusionSchedule s = diff::make_schedule(12, 1e-4, 0.02);

    nn::Rng rng2(38);
    const nn::Tensor cond = rand_tensor({3, 2}, rng2);
    const nn::Tensor full = diff::generate(dn, ps, s, cond, 99, 0);
    REQUIRE(full.rows() == 3);
    for (std::size_t r = 0; r < 3; ++r) {
        nn::Tensor cr({1, 2});
        cr.at(0, 0) = cond.at(r, 0);
        cr.at(0, 1) = cond.at(r, 1);
        const nn::Tensor one = diff::generate(dn, ps, s, cr, 99, r);
        CHECK(one.at(0, 0) == full.at(r, 0));
        CHECK(one.at(0, 1) == full.at(r, 1));
    }
    // same seed, same result; different seed, different noise path
    const nn::Tensor again = diff::generate(dn, ps, s, cond, 99, 0);
    for (std::size_t i = 0; i < full.numel(); ++i) CHECK(again[i] == full[i]);
    const nn::Tensor other = diff::generate(dn, ps, s, cond, 100, 0);
    bool differs = false;
    for (std::size_t i = 0; i < full.numel(); ++i) differs |= other[i] != full[i];
    CHECK(differs);
}

TEST_CASE("diverging chains are reported") {
    diff::DenoiserConfig dc;
    dc.g_dim = 2;
    dc.cond_dim = 1;
    dc.width = 8;
    dc.hidden_layers = 1;
    dc.time_dim = 4;
    const diff::Denoiser dn(dc);
    nn::ParamStore ps;
    nn::Rng rng(41);
    dn.init_params(ps, rng);
    for (double& w : ps.get("dn.out.w").data()) w = 1e8;  // force an exploding prediction
    const diff::DiffusionSchedule s = diff::make_schedule(12, 1e-4, 0.02);
    CHECK_THROWS_AS(diff::generate(dn, ps, s, nn::Tensor::matrix(1, 1, {1.0}), 5, 0),
                    std::runtime_error);
}

TEST_CASE("zero predictor scores the noise dimension") {
    // with eps_hat == 0 the denoising term averages ||eps||^2 per row, whose
    // expectation is the row dimension
    const std::size_t B = 8;
    nn::Rng rng(43);
    double acc = 0.0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
        nn::Tensor eps({1, B});
        for (std::size_t j = 0; j < B; ++j) eps[j] = rng.normal();
        nn::Graph g;
        nn::Var zero = g.constant(nn::Tensor::zeros({1, B}));
        nn::Var zhat = g.leaf(nn::Tensor::zeros({1, 2}));
        nn::Var l = loss::loss_recon(g, eps, zero, zhat, zhat, true);
        acc += g.value(l)[0];
    }
    acc /= n;
    CHECK(std::abs(acc - static_cast<double>(B)) / B < 0.05);
}

TEST_CASE("a conditional model separates two modes") {
    // point targets g0 = +1 for cond (1,0) and g0 = -1 for cond (0,1)
    diff::DenoiserConfig dc;
    dc.g_dim = 1;
    dc.cond_dim = 2;
    dc.width = 32;
    dc.hidden_layers = 2;
    dc.time_dim = 8;
    const diff::Denoiser dn(dc);
    nn::ParamStore ps;
    nn::Rng rng(47);
    dn.init_params(ps, rng);
    const diff::DiffusionSchedule s = diff::make_schedule(10, 1e-4, 0.02);

    nn::Adam adam({3e-3});
    nn::Rng data(48);
    for (int step = 0; step < 1500; ++step) {
        const std::size_t batch = 32;
        nn::Tensor gt({batch, 1}), cond({batch, 2}), eps({batch, 1});
        std::vector<std::size_t> ts(batch);
        for (std::size_t i = 0; i < batch; ++i) {
            const bool hi = data.uniform() < 0.5;
            const double g0 = hi ? 1.0 : -1.0;
            cond.at(i, 0) = hi ? 1.0 : 0.0;
            cond.at(i, 1) = hi ? 0.0 : 1.0;
            ts[i] = 1 + data.uniform_index(s.steps());
            eps[i] = data.normal();
            nn::Tensor g0t = nn::Tensor::matrix(1, 1, {g0});
            nn::Tensor et = nn::Tensor::matrix(1, 1, {eps[i]});
            gt.at(i, 0) = diff::forward_sample(g0t, ts[i], et, s)[0];
        }
        nn::Graph g;
        nn::Var pred = dn.forward(g, ps, g.constant(gt), g.constant(cond), ts, s);
        nn::Var loss = g.scale(g.sum(g.square(g.sub(pred, g.constant(eps)))),
                               1.0 / static_cast<double>(batch));
        g.backward(loss);
        adam.step(ps, g.param_grads());
    }

    nn::Tensor cond({200, 2});
    for (std::size_t i = 0; i < 200; ++i) {
        cond.at(i, 0) = i < 100 ? 1.0 : 0.0;
        cond.at(i, 1) = i < 100 ? 0.0 : 1.0;
    }
    const nn::Tensor samples = diff::generate(dn, ps, s, cond, 49, 0);
    int ok = 0;
    for (std::size_t i = 0; i < 200; ++i) {
        const double target = i < 100 ? 1.0 : -1.0;
        if (std::abs(samples.at(i, 0) - target) < 0.2) ++ok;
    }
    CHECK(ok >= 190);
}
