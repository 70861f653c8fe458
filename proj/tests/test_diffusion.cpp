#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "specdiff/diffusion.hpp"
#include "specdiff/error.hpp"

using namespace specdiff;

TEST_CASE("schedule construction") {
    auto one = make_ddpm_schedule(1, 0.5, 0.5);
    CHECK(one.abar(1) == doctest::Approx(0.5));
    CHECK(one.abar(0) == 1.0);

    auto three = make_ddpm_schedule(3, 0.1, 0.3);
    CHECK(three.beta[1] == doctest::Approx(0.1));
    CHECK(three.beta[2] == doctest::Approx(0.2));
    CHECK(three.beta[3] == doctest::Approx(0.3));
    CHECK(three.abar(1) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(three.abar(2) == doctest::Approx(0.72).epsilon(1e-12));
    CHECK(three.abar(3) == doctest::Approx(0.504).epsilon(1e-12));

    auto def = make_ddpm_schedule();
    // terminal signal level of the default table: exp(-sum beta) ~ 0.132
    CHECK(def.abar(def.T) == doctest::Approx(0.13218).epsilon(1e-3));
    CHECK(def.abar(def.T) < 0.15);
    for (int t = 2; t <= def.T; ++t) {
        CHECK(def.beta[t] > def.beta[t - 1]);
        CHECK(def.beta[t] > 0.0);
        CHECK(def.beta[t] < 1.0);
        CHECK(def.abar(t) < def.abar(t - 1));
    }
    // abar equals the direct product
    double prod = 1.0;
    for (int t = 1; t <= def.T; ++t) {
        prod *= 1.0 - def.beta[t];
        CHECK(def.abar(t) == doctest::Approx(prod).epsilon(1e-12));
    }

    CHECK_THROWS_AS(make_ddpm_schedule(10, 0.2, 0.1), ConfigError);
    CHECK_THROWS_AS(make_ddpm_schedule(10, 0.0, 0.1), ConfigError);
    CHECK_THROWS_AS(make_ddpm_schedule(10, 0.1, 1.0), ConfigError);
    CHECK_THROWS_AS(make_ddpm_schedule(0, 0.1, 0.2), ConfigError);
}

TEST_CASE("edm sigma grid follows the rho parameterization") {
    auto s = make_edm_schedule(0.002, 80.0, 7.0, 0.5);
    auto grid = edm_sigma_grid(s, 10);
    CHECK(grid.front() == doctest::Approx(80.0));
    CHECK(grid.back() == doctest::Approx(0.002));
    const double a = std::pow(80.0, 1.0 / 7.0), b = std::pow(0.002, 1.0 / 7.0);
    for (int i = 0; i < 10; ++i)
        CHECK(grid[i] == doctest::Approx(std::pow(a + i / 9.0 * (b - a), 7.0)).epsilon(1e-12));
    for (int i = 1; i < 10; ++i) CHECK(grid[i] < grid[i - 1]);
}

TEST_CASE("forward_diffuse endpoints") {
    NoiseSchedule s;
    s.T = 2;
    s.beta = {0.0, 0.1, 0.1};
    s.alpha = {0.0, 0.9, 0.9};
    s.alpha_bar = {1.0, 1.0, 0.0};  // synthetic endpoints
    auto x0 = Tensor::from({1, 4}, {1.0, 2.0, 3.0, 4.0});
    auto eps = Tensor::from({1, 4}, {-1.0, 0.5, 0.25, -2.0});
    auto at_one = forward_diffuse(x0, eps, {1}, s);
    for (int i = 0; i < 4; ++i) CHECK(at_one.values()[i] == x0.values()[i]);
    auto at_zero = forward_diffuse(x0, eps, {2}, s);
    for (int i = 0; i < 4; ++i) CHECK(at_zero.values()[i] == eps.values()[i]);
    CHECK_THROWS_AS(forward_diffuse(x0, eps, {3}, s), UsageError);
    CHECK_THROWS_AS(forward_diffuse(x0, eps, {0}, s), UsageError);
}

TEST_CASE("forward_diffuse Monte Carlo variance matches the closed form") {
    auto s = make_ddpm_schedule(50, 1e-3, 0.05);
    const int t = 25;
    const double abar = s.abar(t);
    Rng rng(503);
    const int trials = 100000;
    for (double sigma0 : {1.0, 2.0}) {
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < trials; ++i) {
            auto x0 = Tensor::from({1, 1}, {sigma0 * rng.gaussian()});
            auto ep = Tensor::from({1, 1}, {rng.gaussian()});
            const double v = forward_diffuse(x0, ep, {t}, s).values()[0];
            sum += v;
            sq += v * v;
        }
        const double mean = sum / trials;
        const double var = sq / trials - mean * mean;
        const double expect = abar * sigma0 * sigma0 + (1.0 - abar);
        CHECK(std::abs(var - expect) <= 0.02 * expect);
    }
}

TEST_CASE("single-step composition matches the closed-form marginal") {
    auto s = make_ddpm_schedule(10, 0.01, 0.2);
    const int t = 10;
    Rng rng(509);
    const int trials = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < trials; ++i) {
        double x = 2.0 * rng.gaussian();  // Var(x0) = 4
        for (int k = 1; k <= t; ++k)
            x = std::sqrt(1.0 - s.beta[k]) * x + std::sqrt(s.beta[k]) * rng.gaussian();
        sum += x;
        sq += x * x;
    }
    const double var = sq / trials - (sum / trials) * (sum / trials);
    const double expect = s.abar(t) * 4.0 + (1.0 - s.abar(t));
    CHECK(std::abs(var - expect) <= 0.02 * expect);
}

TEST_CASE("edm_noise") {
    Rng rng(521);
    auto x0 = Tensor::from({1, 8}, oracle::random_vec(8, rng));
    auto ep = Tensor::from({1, 8}, oracle::random_vec(8, rng));
    auto near = edm_noise(x0, ep, {1e-12});
    for (int i = 0; i < 8; ++i)
        CHECK(near.values()[i] == doctest::Approx(x0.values()[i]).epsilon(1e-9));

    auto doubled = edm_noise(Tensor::zeros({1, 8}), ep, {2.0});
    for (int i = 0; i < 8; ++i) CHECK(doubled.values()[i] == 2.0 * ep.values()[i]);
    CHECK_THROWS_AS(edm_noise(x0, ep, {0.0}), UsageError);

    double sq = 0.0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
        const double d = 0.7 * rng.gaussian();
        sq += d * d;
    }
    CHECK(std::abs(std::sqrt(sq / trials) - 0.7) <= 0.01 * 0.7);
}

TEST_CASE("sample_sigma_train distribution") {
    auto s = make_edm_schedule();
    Rng rng(523);
    std::vector<double> draws(100000);
    for (auto& d : draws) {
        d = sample_sigma_train(rng, s);
        CHECK(d >= s.sigma_min);
        CHECK(d <= s.sigma_max);
    }
    std::nth_element(draws.begin(), draws.begin() + draws.size() / 2, draws.end());
    const double median = draws[draws.size() / 2];
    CHECK(std::abs(median - std::exp(-1.2)) <= 0.05 * std::exp(-1.2));

    Rng a(7), b(7);
    for (int i = 0; i < 10; ++i) CHECK(sample_sigma_train(a, s) == sample_sigma_train(b, s));
}

TEST_CASE("ddpm_step") {
    // near-zero beta leaves the state unchanged
    NoiseSchedule tiny;
    tiny.T = 2;
    tiny.beta = {0.0, 1e-12, 1e-12};
    tiny.alpha = {0.0, 1.0 - 1e-12, 1.0 - 1e-12};
    tiny.alpha_bar = {1.0, 1.0 - 1e-12, (1.0 - 1e-12) * (1.0 - 1e-12)};
    auto x = Tensor::from({1, 4}, {1.0, -2.0, 0.5, 3.0});
    auto ep = Tensor::from({1, 4}, {0.3, 0.1, -0.2, 0.4});
    auto z = Tensor::zeros({1, 4});
    auto stepped = ddpm_step(x, ep, 2, tiny, z);
    // the update deviates by O(sqrt(beta)), so ~1e-6 at beta = 1e-12
    for (int i = 0; i < 4; ++i) CHECK(std::abs(stepped.values()[i] - x.values()[i]) <= 1e-5);

    // t = 1 injects no noise even without a z argument
    auto s = make_ddpm_schedule(5, 0.01, 0.2);
    auto final1 = ddpm_step(x, ep, 1, s, Tensor());
    auto final2 = ddpm_step(x, ep, 1, s, Tensor());
    for (int i = 0; i < 4; ++i) CHECK(final1.values()[i] == final2.values()[i]);

    // scalar oracle
    const int t = 3;
    auto zt = Tensor::from({1, 1}, {0.7});
    auto xs = Tensor::from({1, 1}, {1.5});
    auto es = Tensor::from({1, 1}, {-0.4});
    const double beta = s.beta[t], alpha = s.alpha[t], abar = s.abar(t);
    const double want =
        (1.5 - beta / std::sqrt(1.0 - abar) * -0.4) / std::sqrt(alpha) + std::sqrt(beta) * 0.7;
    CHECK(ddpm_step(xs, es, t, s, zt).values()[0] == doctest::Approx(want).epsilon(1e-12));
    CHECK_THROWS_AS(ddpm_step(xs, es, 0, s, zt), UsageError);
    CHECK_THROWS_AS(ddpm_step(xs, es, 6, s, zt), UsageError);
}

TEST_CASE("ddim_step: exact predictor maps between marginals") {
    auto s = make_ddpm_schedule(20, 1e-3, 0.1);
    Rng rng(541);
    auto x0 = Tensor::from({1, 8}, oracle::random_vec(8, rng));
    auto ep = Tensor::from({1, 8}, oracle::random_vec(8, rng));
    const int t = 15, t_prev = 9;
    auto x_t = forward_diffuse(x0, ep, {t}, s);
    auto moved = ddim_step(x_t, ep, t, t_prev, s);
    auto want = forward_diffuse(x0, ep, {t_prev}, s);
    for (int i = 0; i < 8; ++i)
        CHECK(moved.values()[i] == doctest::Approx(want.values()[i]).epsilon(1e-12));

    // t_prev at abar == 1 returns xhat0 itself
    NoiseSchedule clean;
    clean.T = 2;
    clean.beta = {0.0, 0.0, 0.5};
    clean.alpha = {0.0, 1.0, 0.5};
    clean.alpha_bar = {1.0, 1.0, 0.5};
    auto xt2 = forward_diffuse(x0, ep, {2}, clean);
    auto back = ddim_step(xt2, ep, 2, 1, clean);
    for (int i = 0; i < 8; ++i)
        CHECK(back.values()[i] == doctest::Approx(x0.values()[i]).epsilon(1e-12));

    // determinism and index validation
    auto a = ddim_step(x_t, ep, t, t_prev, s);
    auto b = ddim_step(x_t, ep, t, t_prev, s);
    for (int i = 0; i < 8; ++i) CHECK(a.values()[i] == b.values()[i]);
    CHECK_THROWS_AS(ddim_step(x_t, ep, t, t, s), UsageError);
    CHECK_THROWS_AS(ddim_step(x_t, ep, 5, 9, s), UsageError);
}

TEST_CASE("ddim consistency: perfect predictor keeps xhat0 constant") {
    auto s = make_ddpm_schedule(50, 1e-3, 0.08);
    Rng rng(547);
    auto x0 = Tensor::from({1, 8}, oracle::random_vec(8, rng));
    auto ep = Tensor::from({1, 8}, oracle::random_vec(8, rng));
    for (int t = 1; t <= 50; ++t) {
        auto x_t = forward_diffuse(x0, ep, {t}, s);
        const double abar = s.abar(t);
        for (int i = 0; i < 8; ++i) {
            const double xhat =
                (x_t.values()[i] - std::sqrt(1.0 - abar) * ep.values()[i]) / std::sqrt(abar);
            CHECK(std::abs(xhat - x0.values()[i]) <= 1e-10);
        }
    }
}

TEST_CASE("edm_euler_step") {
    Rng rng(557);
    auto x = Tensor::from({1, 6}, oracle::random_vec(6, rng));
    auto ep = Tensor::from({1, 6}, oracle::random_vec(6, rng));

    auto same = edm_euler_step(x, ep, 2.0, 2.0);
    for (int i = 0; i < 6; ++i) CHECK(same.values()[i] == x.values()[i]);

    // exact noise, final step to sigma 0 recovers x0
    auto x0 = Tensor::from({1, 6}, oracle::random_vec(6, rng));
    auto corrupted = edm_noise(x0, ep, {1.7});
    auto recovered = edm_euler_step(corrupted, ep, 1.7, 0.0);
    for (int i = 0; i < 6; ++i)
        CHECK(recovered.values()[i] == doctest::Approx(x0.values()[i]).epsilon(1e-12));

    // scalar hand values: x + (s1 - s0) * eps
    auto xs = Tensor::from({1, 1}, {2.0});
    auto es = Tensor::from({1, 1}, {0.5});
    CHECK(edm_euler_step(xs, es, 3.0, 1.0).values()[0] == doctest::Approx(2.0 - 1.0));
    CHECK_THROWS_AS(edm_euler_step(xs, es, 1.0, 2.0), UsageError);
}

TEST_CASE("sampler determinism and zero-net trace") {
    DenoiserNet net({.channels = 4, .blocks = 1, .emb_width = 8});
    Rng rng(563);
    net.init(rng);  // projection is zero -> eps_pred == 0

    auto s = make_ddpm_schedule(20, 1e-3, 0.1);
    SamplerSpec spec{SamplerKind::Ddim, 5, 99};
    auto a = sample(net, s, spec, 3, 8, 8);
    auto b = sample(net, s, spec, 3, 8, 8);
    REQUIRE(a.size() == 3);
    for (int i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < a[i].size(); ++k) CHECK(a[i].data[k] == b[i].data[k]);

    // zero net: every DDIM step multiplies by sqrt(abar_prev / abar_t);
    // replay the recursion against the initial noise
    Rng noise(99);
    std::vector<double> x_T(64);
    for (auto& v : x_T) v = noise.gaussian();
    const std::vector<int> times{20, 15, 10, 5, 1};
    double factor = 1.0;
    for (std::size_t j = 0; j < times.size(); ++j) {
        const int t = times[j];
        const int t_prev = j + 1 < times.size() ? times[j + 1] : 0;
        factor *= std::sqrt(s.abar(t_prev) / s.abar(t));
    }
    for (std::size_t k = 0; k < 64; ++k)
        CHECK(a[0].data[k] == doctest::Approx(x_T[k] * factor).epsilon(1e-12));

    // single-step DDIM applies one update from T straight to the estimate
    auto one = sample(net, s, SamplerSpec{SamplerKind::Ddim, 1, 99}, 1, 8, 8);
    for (std::size_t k = 0; k < 64; ++k)
        CHECK(one[0].data[k] ==
              doctest::Approx(x_T[k] / std::sqrt(s.abar(20))).epsilon(1e-12));

    // finite outputs, right shape, ddpm differs from ddim
    auto d = sample(net, s, SamplerSpec{SamplerKind::Ddpm, 20, 99}, 1, 8, 8);
    CHECK(d[0].rows == 8);
    CHECK(d[0].cols == 8);
    for (double v : d[0].data) CHECK(std::isfinite(v));
    double diff = 0.0;
    for (std::size_t k = 0; k < 64; ++k) diff += std::abs(d[0].data[k] - a[0].data[k]);
    CHECK(diff > 1e-6);

    CHECK_THROWS_AS(sample(net, s, SamplerSpec{SamplerKind::Ddim, 21, 1}, 1, 8, 8), UsageError);
    CHECK_THROWS_AS(sample(net, s, SamplerSpec{SamplerKind::Ddpm, 10, 1}, 1, 8, 8), UsageError);

    auto es = make_edm_schedule(0.02, 10.0, 7.0, 0.5);
    auto e = sample(net, es, SamplerSpec{SamplerKind::EdmEuler, 8, 5}, 2, 8, 8);
    CHECK(e.size() == 2);
    for (double v : e[0].data) CHECK(std::isfinite(v));
}
