#pragma once

#include <cstdint>
#include <vector>

#include "specdiff/grid.hpp"
#include "specdiff/nn.hpp"
#include "specdiff/rng.hpp"
#include "specdiff/tensor.hpp"

namespace specdiff {

enum class ScheduleKind { DdpmLinear, Edm };

struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::DdpmLinear;

    // DDPM tables, 1-indexed by t; alpha_bar[0] == 1 by definition.
    int T = 0;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;

    // EDM parameters.
    double sigma_min = 0.002;
    double sigma_max = 80.0;
    double rho = 7.0;
    double sigma_data = 0.5;

    double abar(int t) const;  // t in [0, T]
};

NoiseSchedule make_ddpm_schedule(int T = 200, double beta_min = 1e-4, double beta_max = 0.02);
NoiseSchedule make_edm_schedule(double sigma_min = 0.002, double sigma_max = 80.0,
                                double rho = 7.0, double sigma_data = 0.5);

// sigma_i = (smax^(1/rho) + i/(n-1) * (smin^(1/rho) - smax^(1/rho)))^rho,
// i = 0..n-1, decreasing from sigma_max to sigma_min.
std::vector<double> edm_sigma_grid(const NoiseSchedule& s, int n);

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, per-sample t.
Tensor forward_diffuse(const Tensor& x0, const Tensor& eps, const std::vector<int>& t,
                       const NoiseSchedule& s);

// x_sigma = x0 + sigma * eps, per-sample sigma > 0.
Tensor edm_noise(const Tensor& x0, const Tensor& eps, const std::vector<double>& sigmas);

// Training-time noise level: ln(sigma) ~ N(-1.2, 1.2), clamped to
// [sigma_min, sigma_max].
double sample_sigma_train(Rng& rng, const NoiseSchedule& s);

// Ancestral update: x_{t-1} = (x_t - beta_t/sqrt(1-abar_t) eps_pred)/sqrt(alpha_t)
// + sqrt(beta_t) z, with z forced to zero at t = 1.
Tensor ddpm_step(const Tensor& x_t, const Tensor& eps_pred, int t, const NoiseSchedule& s,
                 const Tensor& z);

// Deterministic update to t_prev in [0, t): sqrt(abar_prev) xhat0 +
// sqrt(1-abar_prev) eps_pred, with xhat0 from the supervision target.
Tensor ddim_step(const Tensor& x_t, const Tensor& eps_pred, int t, int t_prev,
                 const NoiseSchedule& s);

// Probability-flow Euler step: x += (sigma_next - sigma_i) * eps_pred.
Tensor edm_euler_step(const Tensor& x_sigma, const Tensor& eps_pred, double sigma_i,
                      double sigma_next);

enum class SamplerKind { Ddpm, Ddim, EdmEuler };

struct SamplerSpec {
    SamplerKind kind = SamplerKind::Ddim;
    int steps = 50;
    std::uint64_t seed = 0;
};

// n reverse trajectories of shape rows x cols from pure noise. Trajectory i
// draws its noise from an Rng seeded spec.seed + i, so outputs do not depend
// on internal batching.
std::vector<Grid> sample(const DenoiserNet& net, const NoiseSchedule& s, const SamplerSpec& spec,
                         int n, int rows, int cols);

}  // namespace specdiff
