#include "specdiff/verify.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>

#include "specdiff/diffusion.hpp"
#include "specdiff/fft.hpp"
#include "specdiff/losses.hpp"
#include "specdiff/nn.hpp"
#include "specdiff/rng.hpp"
#include "specdiff/wavelet.hpp"

namespace specdiff {

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = 2.0 * rng.uniform() - 1.0;
    return v;
}

Grid random_grid(int rows, int cols, Rng& rng) {
    return Grid::image(rows, cols, random_vec(static_cast<std::size_t>(rows) * cols, rng));
}

// Direct-summation DFT used only to cross-check the fast path.
std::vector<std::complex<double>> direct_dft(const std::vector<double>& x, int rows, int cols) {
    std::vector<std::complex<double>> out(x.size());
    for (int u = 0; u < rows; ++u)
        for (int v = 0; v < cols; ++v) {
            std::complex<double> acc(0.0, 0.0);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) {
                    const double ang = -2.0 * M_PI * (static_cast<double>(u) * r / rows +
                                                      static_cast<double>(v) * c / cols);
                    acc += x[static_cast<std::size_t>(r) * cols + c] *
                           std::complex<double>(std::cos(ang), std::sin(ang));
                }
            out[static_cast<std::size_t>(u) * cols + v] = acc;
        }
    return out;
}

CheckResult check_parseval(Rng& rng) {
    const std::pair<int, int> shapes[] = {{1, 8}, {1, 16}, {16, 16}, {12, 20}};
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto [r, c] = shapes[i % 4];
        Grid g = random_grid(r, c, rng);
        double sig = 0.0;
        for (double v : g.data) sig += v * v;
        const Spectrum s = dft(g);
        double spec = 0.0;
        for (const auto& x : s.coeffs) spec += std::norm(x);
        spec /= static_cast<double>(g.size());
        worst = std::max(worst, std::abs(sig - spec) / std::max(sig, 1e-30));
    }
    return {"parseval", worst, 1e-9, worst <= 1e-9};
}

CheckResult check_dft_direct(Rng& rng) {
    double worst = 0.0;
    for (int n : {4, 6, 8, 12, 16}) {
        auto x = random_vec(n, rng);
        auto ref = direct_dft(x, 1, n);
        auto s = dft(Grid::vec(x));
        for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(s.coeffs[i] - ref[i]));
    }
    for (auto [r, c] : {std::pair{6, 8}, {12, 16}, {4, 12}}) {
        auto x = random_vec(static_cast<std::size_t>(r) * c, rng);
        auto ref = direct_dft(x, r, c);
        auto s = dft(Grid::image(r, c, x));
        for (std::size_t i = 0; i < ref.size(); ++i)
            worst = std::max(worst, std::abs(s.coeffs[i] - ref[i]));
    }
    return {"dft-vs-direct", worst, 1e-10, worst <= 1e-10};
}

CheckResult check_reconstruction(const std::string& bank_name, double tol, Rng& rng) {
    const FilterBank bank = filter_bank(bank_name);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const int levels = 1 + i % 3;
        Grid g = (i % 2 == 0) ? Grid::vec(random_vec(32, rng)) : random_grid(16, 16, rng);
        Grid back = idwt(dwt(g, bank, levels), bank);
        for (std::size_t k = 0; k < g.size(); ++k)
            worst = std::max(worst, std::abs(back.data[k] - g.data[k]));
    }
    return {bank_name + "-reconstruction", worst, tol, worst <= tol};
}

// Finite-difference gradient checks for every loss, through a two-layer net.
std::vector<CheckResult> check_gradients(Rng& rng) {
    DenoiserNet net({.channels = 6, .blocks = 0, .emb_width = 8});
    net.init(rng);
    auto pw = net.param("proj.w");
    for (std::int64_t i = 0; i < pw.size(); ++i) pw.data()[i] = 0.2 * (2.0 * rng.uniform() - 1.0);
    const TimeEmbedding emb = net.time_embedding();

    auto sched = make_ddpm_schedule(50, 1e-3, 0.05);
    const int t = 25;
    auto x0 = Tensor::from({1, 1, 8, 8}, random_vec(64, rng));
    auto eps = Tensor::from({1, 1, 8, 8}, random_vec(64, rng));
    auto x_t = forward_diffuse(x0, eps, {t}, sched);
    auto emb_t = Tensor::from({1, 8}, embed_time(t, emb));
    const double sigma = 0.8;
    auto x_sig = edm_noise(x0, eps, {sigma});
    auto emb_sig = Tensor::from({1, 8}, embed_sigma(sigma, emb));

    struct Case {
        const char* name;
        std::function<Tensor(DenoiserNet&)> fn;
    };
    const Case cases[] = {
        {"gradient-ddpm",
         [&](DenoiserNet& n) { return ddpm_loss(eps, n.forward(x_t, emb_t)); }},
        {"gradient-edm",
         [&](DenoiserNet& n) { return edm_loss(eps, n.forward(x_sig, emb_sig), {sigma}, 0.5); }},
        {"gradient-amp",
         [&](DenoiserNet& n) {
             auto xhat = spectral_supervision_target(x_t, n.forward(x_t, emb_t), sched, {t});
             return fourier_amplitude_loss(x0, xhat);
         }},
        {"gradient-amp-phase",
         [&](DenoiserNet& n) {
             auto xhat = spectral_supervision_target(x_t, n.forward(x_t, emb_t), sched, {t});
             return fourier_amp_phase_loss(x0, xhat);
         }},
        {"gradient-wavelet",
         [&](DenoiserNet& n) {
             auto xhat = spectral_supervision_target(x_t, n.forward(x_t, emb_t), sched, {t});
             return wavelet_loss(x0, xhat, WaveletLossOptions{.bank = "haar", .levels = 2});
         }},
    };
    std::vector<CheckResult> out;
    for (const auto& c : cases) {
        auto report = grad_check(net, c.fn, 1e-4);
        out.push_back({c.name, report.worst, 1e-4, report.pass});
    }
    return out;
}

std::vector<CheckResult> check_loss_identities(Rng& rng) {
    double worst_eq = 0.0;
    double worst_shift = 0.0;
    double worst_dom = -1e300;  // max over pairs of (amp - amp_phase); must stay <= 0
    double worst_lambda = 0.0;
    WaveletLossOptions haar2{.bank = "haar", .levels = 2};
    for (int i = 0; i < 50; ++i) {
        auto xv = random_vec(64, rng);
        auto x = Tensor::from({1, 8, 8}, xv);
        worst_eq = std::max(worst_eq, std::abs(fourier_amplitude_loss(x, x).item()));
        worst_eq = std::max(worst_eq, std::abs(fourier_amp_phase_loss(x, x).item()));
        worst_eq = std::max(worst_eq, std::abs(wavelet_loss(x, x, haar2).item()));

        std::vector<double> shifted(64);
        const int dr = 1 + i % 7, dc = i % 8;
        for (int r = 0; r < 8; ++r)
            for (int c = 0; c < 8; ++c)
                shifted[((r + dr) % 8) * 8 + (c + dc) % 8] = xv[r * 8 + c];
        worst_shift = std::max(
            worst_shift, fourier_amplitude_loss(x, Tensor::from({1, 8, 8}, shifted)).item());

        auto y = Tensor::from({1, 8, 8}, random_vec(64, rng));
        worst_dom = std::max(worst_dom, fourier_amplitude_loss(x, y).item() -
                                            fourier_amp_phase_loss(x, y).item());

        auto d = Tensor::scalar(1.0 + rng.uniform());
        auto sp = Tensor::scalar(rng.uniform());
        auto bd = total_loss(d, sp, 0.0);
        worst_lambda = std::max(worst_lambda, std::abs(bd.total - d.values()[0]));
    }
    return {
        {"loss-zero-at-equality", worst_eq, 1e-12, worst_eq <= 1e-12},
        {"amp-shift-invariance", worst_shift, 1e-9, worst_shift <= 1e-9},
        {"amp-phase-dominance", worst_dom, 0.0, worst_dom <= 0.0},
        {"lambda-zero-baseline", worst_lambda, 0.0, worst_lambda == 0.0},
    };
}

std::vector<CheckResult> check_ddim_algebra(Rng& rng) {
    auto sched = make_ddpm_schedule(100, 1e-4, 0.05);
    auto x0 = Tensor::from({1, 16}, random_vec(16, rng));
    auto eps = Tensor::from({1, 16}, random_vec(16, rng));
    double worst_consistency = 0.0;
    for (int t = 1; t <= 100; ++t) {
        auto x_t = forward_diffuse(x0, eps, {t}, sched);
        auto xhat = spectral_supervision_target(x_t, eps, sched, {t});
        for (int i = 0; i < 16; ++i)
            worst_consistency =
                std::max(worst_consistency, std::abs(xhat.values()[i] - x0.values()[i]));
    }
    double worst_invert = 0.0;
    for (int i = 0; i < 100; ++i) {
        auto a = Tensor::from({1, 8}, random_vec(8, rng));
        auto e = Tensor::from({1, 8}, random_vec(8, rng));
        const int t = 1 + i % 100;
        auto x_t = forward_diffuse(a, e, {t}, sched);
        auto xhat = spectral_supervision_target(x_t, e, sched, {t});
        for (int k = 0; k < 8; ++k)
            worst_invert = std::max(worst_invert, std::abs(xhat.values()[k] - a.values()[k]));
    }
    return {
        {"ddim-xhat-consistency", worst_consistency, 1e-10, worst_consistency <= 1e-10},
        {"eq-xhat-inverts-forward", worst_invert, 1e-12, worst_invert <= 1e-12},
    };
}

}  // namespace

std::vector<CheckResult> run_verification_suite(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<CheckResult> results;
    results.push_back(check_parseval(rng));
    results.push_back(check_dft_direct(rng));
    results.push_back(check_reconstruction("haar", 1e-10, rng));
    results.push_back(check_reconstruction("bior13", 1e-9, rng));
    for (auto& r : check_gradients(rng)) results.push_back(std::move(r));
    for (auto& r : check_loss_identities(rng)) results.push_back(std::move(r));
    for (auto& r : check_ddim_algebra(rng)) results.push_back(std::move(r));
    return results;
}

std::string format_check(const CheckResult& r) {
    char line[160];
    std::snprintf(line, sizeof(line), "[%s] %-26s worst %.3e (tolerance %.1e)",
                  r.pass ? "PASS" : "FAIL", r.name.c_str(), r.worst, r.tolerance);
    return line;
}

}  // namespace specdiff
