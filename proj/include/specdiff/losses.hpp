#pragma once

#include <string>
#include <vector>

#include "specdiff/tensor.hpp"
#include "specdiff/wavelet.hpp"

namespace specdiff {

struct NoiseSchedule;

// Loss inputs are signal batches shaped [B,N] (1-D), [B,H,W], or
// [B,1,H,W]; both arguments of a pairwise loss must match exactly.
// Reductions are an unnormalized per-sample L1/L2 over all coordinates
// followed by a batch mean, with fixed left-to-right summation order.

// ---- denoising objectives ----

// mean_b ||eps_true - eps_pred||_2^2
Tensor ddpm_loss(const Tensor& eps_true, const Tensor& eps_pred);
Tensor ddpm_loss_per_sample(const Tensor& eps_true, const Tensor& eps_pred);

// (sigma^2 + sigma_data^2) / (sigma * sigma_data)^2
double edm_weight(double sigma, double sigma_data);

// mean_b w(sigma_b) ||eps_true - eps_pred||_2^2 with per-sample sigma
Tensor edm_loss(const Tensor& eps_true, const Tensor& eps_pred,
                const std::vector<double>& sigmas, double sigma_data);
Tensor edm_loss_per_sample(const Tensor& eps_true, const Tensor& eps_pred,
                           const std::vector<double>& sigmas, double sigma_data);

// ---- spectral regularizers ----

// mean_b || A(x0) - A(xhat) ||_1 over all frequency bins
Tensor fourier_amplitude_loss(const Tensor& x0, const Tensor& xhat);
Tensor fourier_amplitude_loss_per_sample(const Tensor& x0, const Tensor& xhat);

// mean_b ||dA||_1 * (1 + ||wrap(dphi)||_1); the phase difference is wrapped
// into (-pi, pi] and the wrap is treated as locally constant under
// differentiation. Both norms are global per-sample totals.
Tensor fourier_amp_phase_loss(const Tensor& x0, const Tensor& xhat);
Tensor fourier_amp_phase_loss_per_sample(const Tensor& x0, const Tensor& xhat);

struct BandWeight {
    int level = 1;
    Subband kind = Subband::Approx;
    double gamma = 1.0;
};

struct WaveletLossOptions {
    std::string bank = "haar";
    int levels = 2;
    double gamma_approx = 1.0;
    double gamma_detail = 1.0;
    std::vector<BandWeight> overrides;  // per-(scale, sub-band) weights
};

// mean_b sum_bands gamma_{s,l} || W(x0) - W(xhat) ||_1, approximation band
// included. Weights must be >= 0.
Tensor wavelet_loss(const Tensor& x0, const Tensor& xhat, const WaveletLossOptions& opts);
Tensor wavelet_loss_per_sample(const Tensor& x0, const Tensor& xhat,
                               const WaveletLossOptions& opts);

// ---- combination ----

enum class SpectralKind { None, FourierAmplitude, FourierAmpPhase, Wavelet };

struct LossBreakdown {
    double denoise = 0.0;
    double spectral = 0.0;  // in edm-weighted mode: mean_b lambda_EDM(sigma_b) * s_b
    double lambda = 0.0;    // 1.0 in edm-weighted mode
    double total = 0.0;
    Tensor total_node;  // differentiable total
};

// total = denoise + lambda * spectral, lambda >= 0.
LossBreakdown total_loss(const Tensor& denoise, const Tensor& spectral, double lambda);

// Per-sample lambda_EDM(sigma_b) applied to each sample's spectral term
// before the batch mean.
LossBreakdown total_loss_edm_weighted(const Tensor& denoise_per_sample,
                                      const Tensor& spectral_per_sample,
                                      const std::vector<double>& lambda_per_sample);

// ---- clean-signal estimate feeding every spectral loss ----

// xhat0 = (x_t - sqrt(1 - abar_t) * eps_pred) / sqrt(abar_t), per-sample t.
// Gradient flows through eps_pred only.
Tensor spectral_supervision_target(const Tensor& x_t, const Tensor& eps_pred,
                                   const NoiseSchedule& schedule, const std::vector<int>& t);

// EDM counterpart: xhat0 = x_sigma - sigma * eps_pred.
Tensor spectral_supervision_target_edm(const Tensor& x_sigma, const Tensor& eps_pred,
                                       const std::vector<double>& sigmas);

}  // namespace specdiff
