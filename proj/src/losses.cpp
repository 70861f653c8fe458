#include "specdiff/losses.hpp"

#include <cmath>
#include <complex>

#include "specdiff/diffusion.hpp"
#include "specdiff/error.hpp"
#include "specdiff/fft.hpp"

namespace specdiff {

namespace {

struct SignalLayout {
    int batch;
    int rows;
    int cols;
};

SignalLayout signal_layout(const Tensor& t, const char* op) {
    switch (t.rank()) {
        case 2: return {t.shape()[0], 1, t.shape()[1]};
        case 3: return {t.shape()[0], t.shape()[1], t.shape()[2]};
        case 4:
            if (t.shape()[1] == 1) return {t.shape()[0], t.shape()[2], t.shape()[3]};
            break;
        default: break;
    }
    throw UsageError(std::string(op) + ": expected [B,N], [B,H,W], or [B,1,H,W] signals");
}

void check_pair(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) throw UsageError(std::string(op) + ": shape mismatch");
}

// Real batch -> stacked (Re, Im) DFT planes [B, 2, H, W]. The backward pass
// is the adjoint transform: the real part of the unnormalized inverse DFT
// of the (Re, Im) cotangent.
Tensor dft_planes(const Tensor& x, const SignalLayout& lay) {
    const std::size_t plane = static_cast<std::size_t>(lay.rows) * lay.cols;
    std::vector<double> out(static_cast<std::size_t>(lay.batch) * 2 * plane);
    std::vector<std::complex<double>> buf(plane);
    for (int b = 0; b < lay.batch; ++b) {
        const double* src = x.data() + b * plane;
        for (std::size_t i = 0; i < plane; ++i) buf[i] = src[i];
        dft2_inplace(buf, lay.rows, lay.cols, false);
        double* re = out.data() + (static_cast<std::size_t>(b) * 2) * plane;
        double* im = re + plane;
        for (std::size_t i = 0; i < plane; ++i) {
            re[i] = buf[i].real();
            im[i] = buf[i].imag();
        }
    }
    return make_op({lay.batch, 2, lay.rows, lay.cols}, std::move(out), {x},
                   [lay, plane](detail::Node& self) {
                       if (!self.parents[0]->requires_grad) return;
                       double* gx = self.parents[0]->grad_data();
                       std::vector<std::complex<double>> buf(plane);
                       for (int b = 0; b < lay.batch; ++b) {
                           const double* re =
                               self.grad.data() + (static_cast<std::size_t>(b) * 2) * plane;
                           const double* im = re + plane;
                           for (std::size_t i = 0; i < plane; ++i) buf[i] = {re[i], im[i]};
                           dft2_inplace(buf, lay.rows, lay.cols, true);
                           double* dst = gx + b * plane;
                           for (std::size_t i = 0; i < plane; ++i) dst[i] += buf[i].real();
                       }
                   });
}

// A = |X| with subgradient 0 at X = 0.
Tensor amplitude_of(const Tensor& reim) {
    const int batch = reim.shape()[0], rows = reim.shape()[2], cols = reim.shape()[3];
    const std::size_t plane = static_cast<std::size_t>(rows) * cols;
    std::vector<double> out(static_cast<std::size_t>(batch) * plane);
    for (int b = 0; b < batch; ++b) {
        const double* re = reim.data() + (static_cast<std::size_t>(b) * 2) * plane;
        const double* im = re + plane;
        for (std::size_t i = 0; i < plane; ++i)
            out[b * plane + i] = std::hypot(re[i], im[i]);
    }
    return make_op({batch, rows, cols}, std::move(out), {reim},
                   [batch, plane](detail::Node& self) {
                       if (!self.parents[0]->requires_grad) return;
                       double* g = self.parents[0]->grad_data();
                       const auto& v = self.parents[0]->values;
                       for (int b = 0; b < batch; ++b) {
                           const double* re = v.data() + (static_cast<std::size_t>(b) * 2) * plane;
                           const double* im = re + plane;
                           double* gre = g + (static_cast<std::size_t>(b) * 2) * plane;
                           double* gim = gre + plane;
                           for (std::size_t i = 0; i < plane; ++i) {
                               const double a = std::hypot(re[i], im[i]);
                               if (a == 0.0) continue;
                               const double go = self.grad[b * plane + i];
                               gre[i] += go * re[i] / a;
                               gim[i] += go * im[i] / a;
                           }
                       }
                   });
}

// phi = atan2(Im, Re), defined 0 where X = 0 (with zero gradient there).
Tensor phase_of(const Tensor& reim) {
    const int batch = reim.shape()[0], rows = reim.shape()[2], cols = reim.shape()[3];
    const std::size_t plane = static_cast<std::size_t>(rows) * cols;
    std::vector<double> out(static_cast<std::size_t>(batch) * plane);
    for (int b = 0; b < batch; ++b) {
        const double* re = reim.data() + (static_cast<std::size_t>(b) * 2) * plane;
        const double* im = re + plane;
        for (std::size_t i = 0; i < plane; ++i)
            out[b * plane + i] =
                (re[i] == 0.0 && im[i] == 0.0) ? 0.0 : std::atan2(im[i], re[i]);
    }
    return make_op({batch, rows, cols}, std::move(out), {reim},
                   [batch, plane](detail::Node& self) {
                       if (!self.parents[0]->requires_grad) return;
                       double* g = self.parents[0]->grad_data();
                       const auto& v = self.parents[0]->values;
                       for (int b = 0; b < batch; ++b) {
                           const double* re = v.data() + (static_cast<std::size_t>(b) * 2) * plane;
                           const double* im = re + plane;
                           double* gre = g + (static_cast<std::size_t>(b) * 2) * plane;
                           double* gim = gre + plane;
                           for (std::size_t i = 0; i < plane; ++i) {
                               const double a2 = re[i] * re[i] + im[i] * im[i];
                               if (a2 == 0.0) continue;
                               const double go = self.grad[b * plane + i];
                               gre[i] += go * (-im[i] / a2);
                               gim[i] += go * (re[i] / a2);
                           }
                       }
                   });
}

double wrap_to_pi(double d) {
    // maps into (-pi, pi]
    return d - 2.0 * M_PI * std::ceil((d - M_PI) / (2.0 * M_PI));
}

// sum_i |wrap(x_i)| per sample; the wrap is locally constant, so the
// gradient is sign(wrap(x_i)).
Tensor wrapped_abs_sum_per_sample(const Tensor& x) {
    const int batch = x.shape()[0];
    const std::int64_t per = x.size() / batch;
    std::vector<double> out(batch, 0.0);
    for (int b = 0; b < batch; ++b)
        for (std::int64_t i = 0; i < per; ++i)
            out[b] += std::abs(wrap_to_pi(x.data()[b * per + i]));
    return make_op({batch}, std::move(out), {x}, [per](detail::Node& self) {
        if (!self.parents[0]->requires_grad) return;
        const auto& v = self.parents[0]->values;
        double* g = self.parents[0]->grad_data();
        for (std::size_t b = 0; b < self.grad.size(); ++b)
            for (std::int64_t i = 0; i < per; ++i) {
                const double w = wrap_to_pi(v[b * per + i]);
                const double s = w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
                g[b * per + i] += self.grad[b] * s;
            }
    });
}

// sum_i weights_i * |x_i| per sample, weights indexed within the sample.
Tensor weighted_abs_sum_per_sample(const Tensor& x, std::vector<double> weights) {
    const int batch = x.shape()[0];
    const std::int64_t per = x.size() / batch;
    if (per != static_cast<std::int64_t>(weights.size()))
        throw UsageError("weighted_abs_sum_per_sample: weight plane size mismatch");
    std::vector<double> out(batch, 0.0);
    for (int b = 0; b < batch; ++b)
        for (std::int64_t i = 0; i < per; ++i)
            out[b] += weights[i] * std::abs(x.data()[b * per + i]);
    return make_op({batch}, std::move(out), {x},
                   [per, weights = std::move(weights)](detail::Node& self) {
                       if (!self.parents[0]->requires_grad) return;
                       const auto& v = self.parents[0]->values;
                       double* g = self.parents[0]->grad_data();
                       for (std::size_t b = 0; b < self.grad.size(); ++b)
                           for (std::int64_t i = 0; i < per; ++i) {
                               const double x_i = v[b * per + i];
                               const double s = x_i > 0.0 ? 1.0 : (x_i < 0.0 ? -1.0 : 0.0);
                               g[b * per + i] += self.grad[b] * weights[i] * s;
                           }
                   });
}

// Per-sample multi-level DWT into the packed quadrant layout; backward is
// the exact adjoint (no synthesis gain).
Tensor dwt_packed_op(const Tensor& x, const SignalLayout& lay, const FilterBank& bank,
                     int levels) {
    const std::size_t plane = static_cast<std::size_t>(lay.rows) * lay.cols;
    std::vector<double> out(static_cast<std::size_t>(lay.batch) * plane);
    for (int b = 0; b < lay.batch; ++b)
        dwt_packed(x.data() + b * plane, out.data() + b * plane, lay.rows, lay.cols, bank,
                   levels);
    return make_op({lay.batch, lay.rows, lay.cols}, std::move(out), {x},
                   [lay, plane, bank, levels](detail::Node& self) {
                       if (!self.parents[0]->requires_grad) return;
                       double* gx = self.parents[0]->grad_data();
                       std::vector<double> buf(plane);
                       for (int b = 0; b < lay.batch; ++b) {
                           dwt_packed_adjoint(self.grad.data() + b * plane, buf.data(), lay.rows,
                                              lay.cols, bank, levels, false);
                           for (std::size_t i = 0; i < plane; ++i) gx[b * plane + i] += buf[i];
                       }
                   });
}

std::vector<double> resolve_band_weights(const SignalLayout& lay,
                                         const WaveletLossOptions& opts) {
    if (opts.gamma_approx < 0.0 || opts.gamma_detail < 0.0)
        throw ConfigError("wavelet_loss: band weights must be >= 0");
    const auto regions = packed_regions(lay.rows, lay.cols, opts.levels);
    std::vector<double> gamma(regions.size());
    for (std::size_t i = 0; i < regions.size(); ++i)
        gamma[i] = regions[i].kind == Subband::Approx ? opts.gamma_approx : opts.gamma_detail;
    for (const auto& ov : opts.overrides) {
        if (ov.gamma < 0.0) throw ConfigError("wavelet_loss: band weights must be >= 0");
        bool found = false;
        for (std::size_t i = 0; i < regions.size(); ++i) {
            if (regions[i].level == ov.level && regions[i].kind == ov.kind) {
                gamma[i] = ov.gamma;
                found = true;
            }
        }
        if (!found)
            throw ConfigError("wavelet_loss: weight override names a band that does not exist "
                              "(level " + std::to_string(ov.level) + ")");
    }
    std::vector<double> plane(static_cast<std::size_t>(lay.rows) * lay.cols, 0.0);
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const auto& reg = regions[i];
        for (int r = 0; r < reg.rows; ++r)
            for (int c = 0; c < reg.cols; ++c)
                plane[static_cast<std::size_t>(reg.r0 + r) * lay.cols + (reg.c0 + c)] = gamma[i];
    }
    return plane;
}

}  // namespace

// ---- denoising objectives ----

Tensor ddpm_loss_per_sample(const Tensor& eps_true, const Tensor& eps_pred) {
    check_pair(eps_true, eps_pred, "ddpm_loss");
    signal_layout(eps_true, "ddpm_loss");
    return sq_sum_per_sample(sub(eps_true, eps_pred));
}

Tensor ddpm_loss(const Tensor& eps_true, const Tensor& eps_pred) {
    return mean_over_batch(ddpm_loss_per_sample(eps_true, eps_pred));
}

double edm_weight(double sigma, double sigma_data) {
    if (sigma <= 0.0 || sigma_data <= 0.0)
        throw UsageError("edm_weight: sigma and sigma_data must be positive");
    const double p = sigma * sigma_data;
    return (sigma * sigma + sigma_data * sigma_data) / (p * p);
}

Tensor edm_loss_per_sample(const Tensor& eps_true, const Tensor& eps_pred,
                           const std::vector<double>& sigmas, double sigma_data) {
    check_pair(eps_true, eps_pred, "edm_loss");
    const auto lay = signal_layout(eps_true, "edm_loss");
    if (static_cast<int>(sigmas.size()) != lay.batch)
        throw UsageError("edm_loss: one sigma per sample required");
    std::vector<double> w(sigmas.size());
    for (std::size_t i = 0; i < sigmas.size(); ++i) w[i] = edm_weight(sigmas[i], sigma_data);
    return scale_per_sample(sq_sum_per_sample(sub(eps_true, eps_pred)), std::move(w));
}

Tensor edm_loss(const Tensor& eps_true, const Tensor& eps_pred,
                const std::vector<double>& sigmas, double sigma_data) {
    return mean_over_batch(edm_loss_per_sample(eps_true, eps_pred, sigmas, sigma_data));
}

// ---- spectral regularizers ----

Tensor fourier_amplitude_loss_per_sample(const Tensor& x0, const Tensor& xhat) {
    check_pair(x0, xhat, "fourier_amplitude_loss");
    const auto lay = signal_layout(x0, "fourier_amplitude_loss");
    auto a0 = amplitude_of(dft_planes(x0, lay));
    auto ah = amplitude_of(dft_planes(xhat, lay));
    return abs_sum_per_sample(sub(a0, ah));
}

Tensor fourier_amplitude_loss(const Tensor& x0, const Tensor& xhat) {
    return mean_over_batch(fourier_amplitude_loss_per_sample(x0, xhat));
}

Tensor fourier_amp_phase_loss_per_sample(const Tensor& x0, const Tensor& xhat) {
    check_pair(x0, xhat, "fourier_amp_phase_loss");
    const auto lay = signal_layout(x0, "fourier_amp_phase_loss");
    auto s0 = dft_planes(x0, lay);
    auto sh = dft_planes(xhat, lay);
    auto amp_l1 = abs_sum_per_sample(sub(amplitude_of(s0), amplitude_of(sh)));
    auto phase_l1 = wrapped_abs_sum_per_sample(sub(phase_of(s0), phase_of(sh)));
    return mul(amp_l1, add_scalar(phase_l1, 1.0));
}

Tensor fourier_amp_phase_loss(const Tensor& x0, const Tensor& xhat) {
    return mean_over_batch(fourier_amp_phase_loss_per_sample(x0, xhat));
}

Tensor wavelet_loss_per_sample(const Tensor& x0, const Tensor& xhat,
                               const WaveletLossOptions& opts) {
    check_pair(x0, xhat, "wavelet_loss");
    const auto lay = signal_layout(x0, "wavelet_loss");
    const FilterBank bank = filter_bank(opts.bank);
    auto weights = resolve_band_weights(lay, opts);
    auto w0 = dwt_packed_op(x0, lay, bank, opts.levels);
    auto wh = dwt_packed_op(xhat, lay, bank, opts.levels);
    return weighted_abs_sum_per_sample(sub(w0, wh), std::move(weights));
}

Tensor wavelet_loss(const Tensor& x0, const Tensor& xhat, const WaveletLossOptions& opts) {
    return mean_over_batch(wavelet_loss_per_sample(x0, xhat, opts));
}

// ---- combination ----

LossBreakdown total_loss(const Tensor& denoise, const Tensor& spectral, double lambda) {
    if (lambda < 0.0) throw ConfigError("total_loss: lambda must be >= 0");
    if (denoise.size() != 1 || spectral.size() != 1)
        throw UsageError("total_loss: expected scalar loss terms");
    LossBreakdown out;
    out.denoise = denoise.values()[0];
    out.spectral = spectral.values()[0];
    out.lambda = lambda;
    out.total_node = add(denoise, scale(spectral, lambda));
    out.total = out.total_node.values()[0];
    return out;
}

LossBreakdown total_loss_edm_weighted(const Tensor& denoise_per_sample,
                                      const Tensor& spectral_per_sample,
                                      const std::vector<double>& lambda_per_sample) {
    if (denoise_per_sample.shape() != spectral_per_sample.shape() ||
        denoise_per_sample.rank() != 1)
        throw UsageError("total_loss_edm_weighted: per-sample terms must be matching vectors");
    if (static_cast<int>(lambda_per_sample.size()) != denoise_per_sample.shape()[0])
        throw UsageError("total_loss_edm_weighted: one lambda per sample required");
    for (double l : lambda_per_sample)
        if (l < 0.0) throw ConfigError("total_loss_edm_weighted: lambda must be >= 0");

    LossBreakdown out;
    auto denoise_mean = mean_over_batch(denoise_per_sample);
    auto weighted = scale_per_sample(spectral_per_sample, lambda_per_sample);
    auto spectral_mean = mean_over_batch(weighted);
    out.denoise = denoise_mean.values()[0];
    out.spectral = spectral_mean.values()[0];
    out.lambda = 1.0;
    out.total_node = add(denoise_mean, spectral_mean);
    out.total = out.total_node.values()[0];
    return out;
}

// ---- supervision target ----

Tensor spectral_supervision_target(const Tensor& x_t, const Tensor& eps_pred,
                                   const NoiseSchedule& schedule, const std::vector<int>& t) {
    check_pair(x_t, eps_pred, "spectral_supervision_target");
    const auto lay = signal_layout(x_t, "spectral_supervision_target");
    if (static_cast<int>(t.size()) != lay.batch)
        throw UsageError("spectral_supervision_target: one timestep per sample required");
    std::vector<double> inv_sqrt_abar(t.size()), ratio(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < 1 || t[i] > schedule.T)
            throw UsageError("spectral_supervision_target: t = " + std::to_string(t[i]) +
                             " outside [1, " + std::to_string(schedule.T) + "]");
        const double abar = schedule.abar(t[i]);
        if (abar <= 0.0)
            throw ValidationError("spectral_supervision_target: singular schedule (abar == 0)");
        inv_sqrt_abar[i] = 1.0 / std::sqrt(abar);
        ratio[i] = std::sqrt(1.0 - abar) / std::sqrt(abar);
    }
    return sub(scale_per_sample(x_t, std::move(inv_sqrt_abar)),
               scale_per_sample(eps_pred, std::move(ratio)));
}

Tensor spectral_supervision_target_edm(const Tensor& x_sigma, const Tensor& eps_pred,
                                       const std::vector<double>& sigmas) {
    check_pair(x_sigma, eps_pred, "spectral_supervision_target_edm");
    const auto lay = signal_layout(x_sigma, "spectral_supervision_target_edm");
    if (static_cast<int>(sigmas.size()) != lay.batch)
        throw UsageError("spectral_supervision_target_edm: one sigma per sample required");
    for (double s : sigmas)
        if (s <= 0.0) throw UsageError("spectral_supervision_target_edm: sigma must be > 0");
    return sub(x_sigma, scale_per_sample(eps_pred, sigmas));
}

}  // namespace specdiff
