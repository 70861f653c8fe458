#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "oracles.hpp"
#include "specdiff/diffusion.hpp"
#include "specdiff/error.hpp"
#include "specdiff/losses.hpp"
#include "specdiff/wavelet.hpp"

using namespace specdiff;

namespace {

double wrap_ref(double d) { return d - 2.0 * M_PI * std::ceil((d - M_PI) / (2.0 * M_PI)); }

// Scalar re-evaluation of the amplitude-phase loss from naive DFTs.
double amp_phase_oracle(const std::vector<double>& x0, const std::vector<double>& xh, int rows,
                        int cols) {
    auto s0 = oracle::naive_dft_2d(x0, rows, cols);
    auto sh = oracle::naive_dft_2d(xh, rows, cols);
    double amp = 0.0, ph = 0.0;
    for (std::size_t i = 0; i < s0.size(); ++i) {
        amp += std::abs(std::abs(s0[i]) - std::abs(sh[i]));
        const double p0 = std::abs(s0[i]) == 0.0 ? 0.0 : std::arg(s0[i]);
        const double p1 = std::abs(sh[i]) == 0.0 ? 0.0 : std::arg(sh[i]);
        ph += std::abs(wrap_ref(p0 - p1));
    }
    return amp * (1.0 + ph);
}

Tensor batch1(const std::vector<double>& v, int rows, int cols) {
    return Tensor::from({1, rows, cols}, v);
}

}  // namespace

TEST_CASE("ddpm_loss examples") {
    Rng rng(101);
    auto e = Tensor::from({2, 4, 4}, oracle::random_vec(32, rng));
    CHECK(ddpm_loss(e, e).item() == 0.0);

    auto zero = Tensor::zeros({1, 2, 4});
    auto ones = Tensor::full({1, 2, 4}, 1.0);
    CHECK(ddpm_loss(zero, ones).item() == doctest::Approx(8.0));  // d coordinates

    auto a = Tensor::from({2, 4, 4}, oracle::random_vec(32, rng));
    auto b = Tensor::from({2, 4, 4}, oracle::random_vec(32, rng));
    double expect = 0.0;
    for (int s = 0; s < 2; ++s) {
        double per = 0.0;
        for (int i = 0; i < 16; ++i) {
            const double d = a.values()[s * 16 + i] - b.values()[s * 16 + i];
            per += d * d;
        }
        expect += per;
    }
    expect /= 2.0;
    CHECK(ddpm_loss(a, b).item() == doctest::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(ddpm_loss(a, Tensor::zeros({2, 4, 5})), UsageError);
}

TEST_CASE("edm_weight examples") {
    CHECK(edm_weight(1.0, 1.0) == doctest::Approx(2.0));
    CHECK(edm_weight(0.5, 0.5) == doctest::Approx(8.0));
    CHECK(edm_weight(1000.0, 0.5) == doctest::Approx(4.0).epsilon(1e-3));  // 1/sigma_data^2
    CHECK_THROWS_AS(edm_weight(0.0, 1.0), UsageError);
    CHECK_THROWS_AS(edm_weight(1.0, -1.0), UsageError);
}

TEST_CASE("edm_loss examples") {
    Rng rng(103);
    auto e = Tensor::from({3, 4, 4}, oracle::random_vec(48, rng));
    CHECK(edm_loss(e, e, {0.1, 1.0, 10.0}, 0.5).item() == 0.0);

    auto t = Tensor::zeros({1, 1, 1});
    auto p = Tensor::full({1, 1, 1}, 1.0);
    CHECK(edm_loss(t, p, {1.0}, 1.0).item() == doctest::Approx(2.0));

    auto a = Tensor::from({3, 4, 4}, oracle::random_vec(48, rng));
    auto b = Tensor::from({3, 4, 4}, oracle::random_vec(48, rng));
    const std::vector<double> sigmas{0.1, 1.0, 10.0};
    double expect = 0.0;
    for (int s = 0; s < 3; ++s) {
        double per = 0.0;
        for (int i = 0; i < 16; ++i) {
            const double d = a.values()[s * 16 + i] - b.values()[s * 16 + i];
            per += d * d;
        }
        expect += per * (sigmas[s] * sigmas[s] + 0.25) / std::pow(sigmas[s] * 0.5, 2);
    }
    expect /= 3.0;
    CHECK(edm_loss(a, b, sigmas, 0.5).item() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("fourier amplitude loss examples") {
    Rng rng(107);
    auto xv = oracle::random_vec(64, rng);
    auto x = batch1(xv, 8, 8);
    CHECK(fourier_amplitude_loss(x, x).item() == 0.0);

    // circular shift leaves amplitudes unchanged
    std::vector<double> shifted(64);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) shifted[((r + 3) % 8) * 8 + (c + 5) % 8] = xv[r * 8 + c];
    CHECK(fourier_amplitude_loss(x, batch1(shifted, 8, 8)).item() <= 1e-9);

    // impulse: every bin has amplitude exactly 1
    std::vector<double> impulse(16, 0.0);
    impulse[0] = 1.0;
    auto loss = fourier_amplitude_loss(Tensor::from({1, 16}, impulse), Tensor::zeros({1, 16}));
    CHECK(loss.item() == doctest::Approx(16.0).epsilon(1e-9));
}

TEST_CASE("fourier amp-phase loss examples and oracle") {
    Rng rng(109);
    auto xv = oracle::random_vec(16, rng);
    auto x = batch1(xv, 4, 4);
    CHECK(fourier_amp_phase_loss(x, x).item() == 0.0);

    // identical amplitude spectra, different phases -> product annihilates
    std::vector<double> shifted(16);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) shifted[((r + 1) % 4) * 4 + (c + 2) % 4] = xv[r * 4 + c];
    CHECK(fourier_amp_phase_loss(x, batch1(shifted, 4, 4)).item() <= 1e-9);

    auto yv = oracle::random_vec(16, rng);
    const double got = fourier_amp_phase_loss(x, batch1(yv, 4, 4)).item();
    const double want = amp_phase_oracle(xv, yv, 4, 4);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("wavelet loss examples") {
    WaveletLossOptions haar1{.bank = "haar", .levels = 1};
    Rng rng(113);
    auto x = Tensor::from({1, 8, 8}, oracle::random_vec(64, rng));
    CHECK(wavelet_loss(x, x, WaveletLossOptions{.bank = "haar", .levels = 2}).item() == 0.0);

    // constants: only the approximation band differs
    const double c0 = 0.8, c1 = -0.3;
    const int n = 16;
    auto a = Tensor::full({1, n}, c0);
    auto b = Tensor::full({1, n}, c1);
    const double expect = (n / 2.0) * std::sqrt(2.0) * std::abs(c0 - c1);
    CHECK(wavelet_loss(a, b, haar1).item() == doctest::Approx(expect).epsilon(1e-12));

    // random 8x8 pair vs band-by-band oracle (separable direct DWT)
    auto xv = oracle::random_vec(64, rng);
    auto yv = oracle::random_vec(64, rng);
    auto bank = filter_bank("haar");
    auto transform_2d = [&](std::vector<double> img, int size, int levels) {
        // rows then columns per level; order is interchangeable for separable banks
        std::vector<std::vector<double>> out_bands;
        std::vector<double> cur = img;
        int s = size;
        for (int l = 0; l < levels; ++l) {
            std::vector<double> tmp(static_cast<std::size_t>(s) * s);
            for (int r = 0; r < s; ++r) {
                std::vector<double> row(s);
                for (int c = 0; c < s; ++c) row[c] = cur[static_cast<std::size_t>(r) * s + c];
                auto [lo, hi] = oracle::dwt_level_1d(row, bank.analysis_lo, bank.analysis_hi);
                for (int c = 0; c < s / 2; ++c) {
                    tmp[static_cast<std::size_t>(r) * s + c] = lo[c];
                    tmp[static_cast<std::size_t>(r) * s + s / 2 + c] = hi[c];
                }
            }
            std::vector<double> nxt(static_cast<std::size_t>(s) * s);
            for (int c = 0; c < s; ++c) {
                std::vector<double> col(s);
                for (int r = 0; r < s; ++r) col[r] = tmp[static_cast<std::size_t>(r) * s + c];
                auto [lo, hi] = oracle::dwt_level_1d(col, bank.analysis_lo, bank.analysis_hi);
                for (int r = 0; r < s / 2; ++r) {
                    nxt[static_cast<std::size_t>(r) * s + c] = lo[r];
                    nxt[static_cast<std::size_t>(s / 2 + r) * s + c] = hi[r];
                }
            }
            // stash detail quadrants, recurse on the top-left
            std::vector<double> next_ll(static_cast<std::size_t>(s / 2) * (s / 2));
            for (int r = 0; r < s / 2; ++r)
                for (int c = 0; c < s / 2; ++c)
                    next_ll[static_cast<std::size_t>(r) * (s / 2) + c] =
                        nxt[static_cast<std::size_t>(r) * s + c];
            for (int r = 0; r < s; ++r)
                for (int c = 0; c < s; ++c)
                    if (r >= s / 2 || c >= s / 2) {
                        std::vector<double> coef{nxt[static_cast<std::size_t>(r) * s + c]};
                        out_bands.push_back(coef);
                    }
            cur = next_ll;
            s /= 2;
        }
        for (double v : cur) out_bands.push_back({v});
        return out_bands;
    };
    auto bx = transform_2d(xv, 8, 2);
    auto by = transform_2d(yv, 8, 2);
    double expect_l1 = 0.0;
    for (std::size_t i = 0; i < bx.size(); ++i)
        expect_l1 += std::abs(bx[i][0] - by[i][0]);
    const double got = wavelet_loss(Tensor::from({1, 8, 8}, xv), Tensor::from({1, 8, 8}, yv),
                                    WaveletLossOptions{.bank = "haar", .levels = 2})
                           .item();
    CHECK(got == doctest::Approx(expect_l1).epsilon(1e-12));

    CHECK_THROWS_AS(wavelet_loss(x, x, WaveletLossOptions{.bank = "haar", .levels = 5}),
                    ConfigError);
}

TEST_CASE("wavelet loss can target the coarse scale only") {
    Rng rng(127);
    auto xv = oracle::random_vec(64, rng);
    auto yv = oracle::random_vec(64, rng);
    auto x = Tensor::from({1, 8, 8}, xv);
    auto y = Tensor::from({1, 8, 8}, yv);
    WaveletLossOptions coarse{.bank = "haar", .levels = 2, .gamma_approx = 1.0,
                              .gamma_detail = 0.0};
    auto bank = filter_bank("haar");
    std::vector<double> px(64), py(64);
    dwt_packed(xv.data(), px.data(), 8, 8, bank, 2);
    dwt_packed(yv.data(), py.data(), 8, 8, bank, 2);
    double expect = 0.0;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) expect += std::abs(px[r * 8 + c] - py[r * 8 + c]);
    CHECK(wavelet_loss(x, y, coarse).item() == doctest::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(
        wavelet_loss(x, y, WaveletLossOptions{.bank = "haar", .levels = 2, .gamma_detail = -1.0}),
        ConfigError);
}

TEST_CASE("spectral losses are symmetric and non-negative") {
    Rng rng(131);
    WaveletLossOptions haar2{.bank = "haar", .levels = 2};
    for (int trial = 0; trial < 10; ++trial) {
        auto a = Tensor::from({1, 8, 8}, oracle::random_vec(64, rng));
        auto b = Tensor::from({1, 8, 8}, oracle::random_vec(64, rng));
        const double amp_ab = fourier_amplitude_loss(a, b).item();
        const double ap_ab = fourier_amp_phase_loss(a, b).item();
        const double w_ab = wavelet_loss(a, b, haar2).item();
        CHECK(amp_ab >= 0.0);
        CHECK(ap_ab >= 0.0);
        CHECK(w_ab >= 0.0);
        CHECK(std::abs(amp_ab - fourier_amplitude_loss(b, a).item()) <= 1e-12 * amp_ab);
        CHECK(std::abs(ap_ab - fourier_amp_phase_loss(b, a).item()) <= 1e-12 * ap_ab);
        CHECK(std::abs(w_ab - wavelet_loss(b, a, haar2).item()) <= 1e-12 * w_ab);
        // the phase factor is >= 1
        CHECK(ap_ab >= amp_ab);
    }
}

TEST_CASE("total_loss combination") {
    auto d = Tensor::scalar(2.0);
    auto s = Tensor::scalar(3.0);

    auto zero = total_loss(d, s, 0.0);
    CHECK(zero.total == 2.0);  // bitwise baseline recovery
    auto unweighted = total_loss(d, s, 1.0);
    CHECK(unweighted.total == doctest::Approx(5.0));
    auto small = total_loss(d, s, 1e-4);
    CHECK(small.total == doctest::Approx(2.0003).epsilon(1e-15));
    CHECK(small.total ==
          doctest::Approx(small.denoise + small.lambda * small.spectral).epsilon(1e-12));
    CHECK_THROWS_AS(total_loss(d, s, -0.1), ConfigError);
}

TEST_CASE("edm-weighted total applies per-sample lambda before the batch mean") {
    auto d = Tensor::from({2}, {1.0, 3.0});
    auto s = Tensor::from({2}, {2.0, 4.0});
    const std::vector<double> lam{0.5, 2.0};
    auto out = total_loss_edm_weighted(d, s, lam);
    CHECK(out.denoise == doctest::Approx(2.0));
    CHECK(out.spectral == doctest::Approx((0.5 * 2.0 + 2.0 * 4.0) / 2.0));
    CHECK(out.lambda == 1.0);
    CHECK(out.total ==
          doctest::Approx(out.denoise + out.lambda * out.spectral).epsilon(1e-12));
    CHECK_THROWS_AS(total_loss_edm_weighted(d, s, {0.5, -1.0}), ConfigError);
}

TEST_CASE("spectral supervision target inverts the forward corruption") {
    auto sched = make_ddpm_schedule(10, 1e-2, 0.2);
    Rng rng(137);
    auto x0 = Tensor::from({2, 4, 4}, oracle::random_vec(32, rng));
    auto eps = Tensor::from({2, 4, 4}, oracle::random_vec(32, rng));
    const std::vector<int> t{3, 7};
    auto x_t = forward_diffuse(x0, eps, t, sched);
    auto xhat = spectral_supervision_target(x_t, eps, sched, t);
    for (std::int64_t i = 0; i < x0.size(); ++i)
        CHECK(xhat.values()[i] == doctest::Approx(x0.values()[i]).epsilon(1e-12));
}

TEST_CASE("supervision target at abar == 1 returns x_t unchanged") {
    NoiseSchedule s;
    s.T = 1;
    s.beta = {0.0, 0.0};
    s.alpha = {0.0, 1.0};
    s.alpha_bar = {1.0, 1.0};
    auto x_t = Tensor::from({1, 4}, {1.0, -2.0, 0.5, 3.0});
    auto xhat = spectral_supervision_target(x_t, Tensor::zeros({1, 4}), s, {1});
    for (int i = 0; i < 4; ++i) CHECK(xhat.values()[i] == x_t.values()[i]);
}

TEST_CASE("supervision target matches a scalar recomputation") {
    auto sched = make_ddpm_schedule(20, 1e-3, 0.1);
    Rng rng(139);
    auto x_t = Tensor::from({1, 6}, oracle::random_vec(6, rng));
    auto ep = Tensor::from({1, 6}, oracle::random_vec(6, rng));
    const int t = 10;
    auto xhat = spectral_supervision_target(x_t, ep, sched, {t});
    const double abar = sched.abar(t);
    for (int i = 0; i < 6; ++i) {
        const double want =
            (x_t.values()[i] - std::sqrt(1.0 - abar) * ep.values()[i]) / std::sqrt(abar);
        CHECK(xhat.values()[i] == doctest::Approx(want).epsilon(1e-12));
    }
    CHECK_THROWS_AS(spectral_supervision_target(x_t, ep, sched, {0}), UsageError);
    CHECK_THROWS_AS(spectral_supervision_target(x_t, ep, sched, {21}), UsageError);
}

namespace {

// FD check of d(loss)/d(xhat) for a spectral loss.
void check_loss_gradient(const std::function<Tensor(const Tensor&, const Tensor&)>& loss,
                         unsigned seed) {
    Rng rng(seed);
    auto x0v = oracle::random_vec(64, rng);
    auto xhv = oracle::random_vec(64, rng);
    auto x0 = Tensor::from({1, 8, 8}, x0v);

    auto xh = Tensor::from({1, 8, 8}, xhv, true);
    backward(loss(x0, xh));
    auto fd = oracle::finite_diff(
        [&](const std::vector<double>& v) {
            NoGradGuard guard;
            return loss(x0, Tensor::from({1, 8, 8}, v)).item();
        },
        xhv, 1e-5);
    double worst = 0.0;
    for (int i = 0; i < 64; ++i) worst = std::max(worst, oracle::rel_err(xh.grad()[i], fd[i]));
    CHECK(worst <= 1e-4);
}

}  // namespace

TEST_CASE("spectral loss gradients match finite differences") {
    check_loss_gradient(
        [](const Tensor& a, const Tensor& b) { return fourier_amplitude_loss(a, b); }, 211);
    check_loss_gradient(
        [](const Tensor& a, const Tensor& b) { return fourier_amp_phase_loss(a, b); }, 223);
    check_loss_gradient(
        [](const Tensor& a, const Tensor& b) {
            return wavelet_loss(a, b, WaveletLossOptions{.bank = "haar", .levels = 2});
        },
        227);
    check_loss_gradient(
        [](const Tensor& a, const Tensor& b) {
            return wavelet_loss(a, b, WaveletLossOptions{.bank = "bior13", .levels = 2});
        },
        229);
}
