#include "specdiff/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "specdiff/error.hpp"

namespace specdiff {

double NoiseSchedule::abar(int t) const {
    if (t < 0 || t > T)
        throw UsageError("schedule: t = " + std::to_string(t) + " outside [0, " +
                         std::to_string(T) + "]");
    return alpha_bar[static_cast<std::size_t>(t)];
}

NoiseSchedule make_ddpm_schedule(int T, double beta_min, double beta_max) {
    if (T < 1) throw ConfigError("make_ddpm_schedule: T must be >= 1");
    if (!(beta_min > 0.0) || !(beta_max < 1.0) || beta_min > beta_max)
        throw ConfigError("make_ddpm_schedule: need 0 < beta_min <= beta_max < 1");
    if (T > 1 && beta_min == beta_max)
        throw ConfigError("make_ddpm_schedule: linear schedule must be strictly increasing");
    NoiseSchedule s;
    s.kind = ScheduleKind::DdpmLinear;
    s.T = T;
    s.beta.assign(static_cast<std::size_t>(T) + 1, 0.0);
    s.alpha.assign(static_cast<std::size_t>(T) + 1, 0.0);
    s.alpha_bar.assign(static_cast<std::size_t>(T) + 1, 1.0);
    for (int t = 1; t <= T; ++t) {
        const double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / (T - 1);
        s.beta[t] = beta_min + frac * (beta_max - beta_min);
        s.alpha[t] = 1.0 - s.beta[t];
        s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
    }
    return s;
}

NoiseSchedule make_edm_schedule(double sigma_min, double sigma_max, double rho,
                                double sigma_data) {
    if (!(sigma_min > 0.0) || !(sigma_max > sigma_min))
        throw ConfigError("make_edm_schedule: need 0 < sigma_min < sigma_max");
    if (!(rho > 0.0) || !(sigma_data > 0.0))
        throw ConfigError("make_edm_schedule: rho and sigma_data must be positive");
    NoiseSchedule s;
    s.kind = ScheduleKind::Edm;
    s.sigma_min = sigma_min;
    s.sigma_max = sigma_max;
    s.rho = rho;
    s.sigma_data = sigma_data;
    return s;
}

std::vector<double> edm_sigma_grid(const NoiseSchedule& s, int n) {
    if (n < 1) throw UsageError("edm_sigma_grid: n must be >= 1");
    std::vector<double> grid(n);
    if (n == 1) {
        grid[0] = s.sigma_max;
        return grid;
    }
    const double a = std::pow(s.sigma_max, 1.0 / s.rho);
    const double b = std::pow(s.sigma_min, 1.0 / s.rho);
    for (int i = 0; i < n; ++i) {
        const double frac = static_cast<double>(i) / (n - 1);
        grid[i] = std::pow(a + frac * (b - a), s.rho);
    }
    return grid;
}

static int leading_dim(const Tensor& t, const char* op) {
    if (t.rank() < 1) throw UsageError(std::string(op) + ": tensor has no batch dimension");
    return t.shape()[0];
}

Tensor forward_diffuse(const Tensor& x0, const Tensor& eps, const std::vector<int>& t,
                       const NoiseSchedule& s) {
    if (x0.shape() != eps.shape()) throw UsageError("forward_diffuse: shape mismatch");
    const int batch = leading_dim(x0, "forward_diffuse");
    if (static_cast<int>(t.size()) != batch)
        throw UsageError("forward_diffuse: one timestep per sample required");
    std::vector<double> sa(t.size()), sb(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < 1 || t[i] > s.T)
            throw UsageError("forward_diffuse: t = " + std::to_string(t[i]) + " outside [1, " +
                             std::to_string(s.T) + "]");
        const double abar = s.abar(t[i]);
        sa[i] = std::sqrt(abar);
        sb[i] = std::sqrt(1.0 - abar);
    }
    return add(scale_per_sample(x0, std::move(sa)), scale_per_sample(eps, std::move(sb)));
}

Tensor edm_noise(const Tensor& x0, const Tensor& eps, const std::vector<double>& sigmas) {
    if (x0.shape() != eps.shape()) throw UsageError("edm_noise: shape mismatch");
    const int batch = leading_dim(x0, "edm_noise");
    if (static_cast<int>(sigmas.size()) != batch)
        throw UsageError("edm_noise: one sigma per sample required");
    for (double sg : sigmas)
        if (!(sg > 0.0)) throw UsageError("edm_noise: sigma must be > 0");
    return add(x0, scale_per_sample(eps, sigmas));
}

double sample_sigma_train(Rng& rng, const NoiseSchedule& s) {
    const double ln_sigma = -1.2 + 1.2 * rng.gaussian();
    return std::clamp(std::exp(ln_sigma), s.sigma_min, s.sigma_max);
}

Tensor ddpm_step(const Tensor& x_t, const Tensor& eps_pred, int t, const NoiseSchedule& s,
                 const Tensor& z) {
    if (t < 1 || t > s.T)
        throw UsageError("ddpm_step: t = " + std::to_string(t) + " outside [1, " +
                         std::to_string(s.T) + "]");
    if (x_t.shape() != eps_pred.shape()) throw UsageError("ddpm_step: shape mismatch");
    const double beta = s.beta[static_cast<std::size_t>(t)];
    const double alpha = s.alpha[static_cast<std::size_t>(t)];
    const double abar = s.abar(t);
    const double mean_scale = 1.0 / std::sqrt(alpha);
    const double eps_scale = beta / std::sqrt(1.0 - abar);
    Tensor mean = scale(sub(x_t, scale(eps_pred, eps_scale)), mean_scale);
    if (t == 1) return mean;  // no noise on the final step
    if (z.shape() != x_t.shape()) throw UsageError("ddpm_step: noise shape mismatch");
    return add(mean, scale(z, std::sqrt(beta)));
}

Tensor ddim_step(const Tensor& x_t, const Tensor& eps_pred, int t, int t_prev,
                 const NoiseSchedule& s) {
    if (!(0 <= t_prev && t_prev < t && t <= s.T))
        throw UsageError("ddim_step: need 0 <= t_prev < t <= T, got t_prev = " +
                         std::to_string(t_prev) + ", t = " + std::to_string(t));
    if (x_t.shape() != eps_pred.shape()) throw UsageError("ddim_step: shape mismatch");
    const double abar_t = s.abar(t);
    const double abar_prev = s.abar(t_prev);
    // xhat0 = (x_t - sqrt(1-abar_t) eps) / sqrt(abar_t)
    Tensor xhat0 = scale(sub(x_t, scale(eps_pred, std::sqrt(1.0 - abar_t))),
                         1.0 / std::sqrt(abar_t));
    return add(scale(xhat0, std::sqrt(abar_prev)),
               scale(eps_pred, std::sqrt(1.0 - abar_prev)));
}

Tensor edm_euler_step(const Tensor& x_sigma, const Tensor& eps_pred, double sigma_i,
                      double sigma_next) {
    if (!(sigma_i >= sigma_next) || sigma_next < 0.0)
        throw UsageError("edm_euler_step: need sigma_i >= sigma_next >= 0");
    if (x_sigma.shape() != eps_pred.shape()) throw UsageError("edm_euler_step: shape mismatch");
    // d = (x - xhat0)/sigma = eps_pred, so the Euler update is linear in eps.
    return add(x_sigma, scale(eps_pred, sigma_next - sigma_i));
}

// Evenly spaced DDIM time points including T and 1, descending.
static std::vector<int> ddim_times(int T, int steps) {
    std::vector<int> ts(steps);
    for (int j = 0; j < steps; ++j) {
        const double frac = steps == 1 ? 1.0 : static_cast<double>(j) / (steps - 1);
        ts[j] = 1 + static_cast<int>(std::lround(frac * (T - 1)));
    }
    std::reverse(ts.begin(), ts.end());
    return ts;
}

std::vector<Grid> sample(const DenoiserNet& net, const NoiseSchedule& s, const SamplerSpec& spec,
                         int n, int rows, int cols) {
    if (n < 1) throw UsageError("sample: n must be >= 1");
    if (spec.steps < 1) throw UsageError("sample: step count must be >= 1");
    if (s.kind == ScheduleKind::DdpmLinear && spec.steps > s.T)
        throw UsageError("sample: step count exceeds schedule length T = " + std::to_string(s.T));
    if (spec.kind == SamplerKind::Ddpm && spec.steps != s.T)
        throw UsageError("sample: the ddpm sampler runs the full chain (steps must equal T)");
    if (spec.kind == SamplerKind::EdmEuler && s.kind != ScheduleKind::Edm)
        throw UsageError("sample: edm-euler requires an EDM schedule");
    if (spec.kind != SamplerKind::EdmEuler && s.kind != ScheduleKind::DdpmLinear)
        throw UsageError("sample: ddpm/ddim samplers require a DDPM schedule");

    NoGradGuard guard;
    const TimeEmbedding emb = net.time_embedding();
    const std::size_t plane = static_cast<std::size_t>(rows) * cols;
    std::vector<Grid> out;
    out.reserve(n);

    const int group = std::min(n, 16);
    for (int start = 0; start < n; start += group) {
        const int b = std::min(group, n - start);
        std::vector<Rng> rngs;
        rngs.reserve(b);
        for (int i = 0; i < b; ++i) rngs.emplace_back(spec.seed + static_cast<std::uint64_t>(start + i));

        auto draw_batch_noise = [&]() {
            std::vector<double> v(static_cast<std::size_t>(b) * plane);
            for (int i = 0; i < b; ++i)
                for (std::size_t k = 0; k < plane; ++k) v[i * plane + k] = rngs[i].gaussian();
            return v;
        };
        auto embed_all = [&](const std::vector<double>& row) {
            std::vector<double> e;
            e.reserve(static_cast<std::size_t>(b) * emb.width);
            e.insert(e.end(), row.begin(), row.end());
            for (int i = 1; i < b; ++i) e.insert(e.end(), row.begin(), row.end());
            return Tensor::from({b, emb.width}, std::move(e));
        };

        Tensor x = Tensor::from({b, 1, rows, cols}, draw_batch_noise());

        if (spec.kind == SamplerKind::Ddpm) {
            for (int t = s.T; t >= 1; --t) {
                Tensor eps = net.forward(x, embed_all(embed_time(t, emb)));
                Tensor z = t == 1 ? Tensor()
                                  : Tensor::from({b, 1, rows, cols}, draw_batch_noise());
                x = ddpm_step(x, eps, t, s, z);
            }
        } else if (spec.kind == SamplerKind::Ddim) {
            const auto times = ddim_times(s.T, spec.steps);
            for (std::size_t j = 0; j < times.size(); ++j) {
                const int t = times[j];
                const int t_prev = j + 1 < times.size() ? times[j + 1] : 0;
                Tensor eps = net.forward(x, embed_all(embed_time(t, emb)));
                x = ddim_step(x, eps, t, t_prev, s);
            }
        } else {
            const auto sigmas = edm_sigma_grid(s, spec.steps);
            // initial state lives at sigma_max
            {
                double* p = x.data();
                for (std::int64_t i = 0; i < x.size(); ++i) p[i] *= sigmas[0];
            }
            for (int j = 0; j < spec.steps; ++j) {
                const double sig = sigmas[j];
                const double sig_next = j + 1 < spec.steps ? sigmas[j + 1] : 0.0;
                Tensor eps = net.forward(x, embed_all(embed_sigma(sig, emb)));
                x = edm_euler_step(x, eps, sig, sig_next);
            }
        }

        for (int i = 0; i < b; ++i) {
            Grid g = Grid::zeros(rows, cols);
            std::copy(x.data() + i * plane, x.data() + (i + 1) * plane, g.data.begin());
            out.push_back(std::move(g));
        }
    }
    return out;
}

}  // namespace specdiff
