#include "specdiff/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "specdiff/diffusion.hpp"
#include "specdiff/error.hpp"
#include "specdiff/pgm.hpp"

namespace specdiff {

Dataset load_dataset_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("dataset: '" + dir + "' is not a directory");
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm")
            files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("dataset: no .pgm files in '" + dir + "'");

    Dataset data;
    for (const auto& path : files) {
        Grid img = read_pgm(path);
        if (data.images.empty()) {
            data.rows = img.rows;
            data.cols = img.cols;
        } else if (img.rows != data.rows || img.cols != data.cols) {
            throw ConfigError("dataset: mixed image sizes in '" + dir + "' (" +
                              std::to_string(img.rows) + "x" + std::to_string(img.cols) +
                              " vs " + std::to_string(data.rows) + "x" +
                              std::to_string(data.cols) + ")");
        }
        data.images.push_back(std::move(img));
    }
    return data;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::string out = "step,loss_denoise,loss_spectral,lambda,loss_total\n";
    char line[160];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%d,%.12e,%.12e,%.12e,%.12e\n", r.step, r.denoise,
                      r.spectral, r.lambda, r.total);
        out += line;
    }
    return out;
}

namespace {

Tensor batch_to_tensor(const Dataset& data, const std::vector<std::size_t>& idx) {
    const std::size_t plane = static_cast<std::size_t>(data.rows) * data.cols;
    std::vector<double> v(idx.size() * plane);
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy(data.images[idx[i]].data.begin(), data.images[idx[i]].data.end(),
                  v.begin() + i * plane);
    return Tensor::from({static_cast<int>(idx.size()), 1, data.rows, data.cols}, std::move(v));
}

Tensor gaussian_like(int batch, int rows, int cols, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(batch) * rows * cols);
    for (auto& x : v) x = rng.gaussian();
    return Tensor::from({batch, 1, rows, cols}, std::move(v));
}

Tensor spectral_term_per_sample(const TrainConfig& cfg, const Tensor& x0, const Tensor& xhat0) {
    switch (cfg.spectral) {
        case SpectralKind::FourierAmplitude:
            return fourier_amplitude_loss_per_sample(x0, xhat0);
        case SpectralKind::FourierAmpPhase:
            return fourier_amp_phase_loss_per_sample(x0, xhat0);
        case SpectralKind::Wavelet: {
            WaveletLossOptions opts{.bank = cfg.wavelet_bank,
                                    .levels = cfg.wavelet_levels,
                                    .gamma_approx = cfg.gamma_approx,
                                    .gamma_detail = cfg.gamma_detail};
            return wavelet_loss_per_sample(x0, xhat0, opts);
        }
        case SpectralKind::None: break;
    }
    throw UsageError("spectral_term_per_sample: no spectral kind configured");
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& data,
                  const std::function<void(int, const Checkpoint&)>& on_eval) {
    if (data.images.empty()) throw ConfigError("train: dataset is empty");

    DenoiserNet net({.channels = cfg.width,
                     .blocks = cfg.blocks,
                     .emb_width = cfg.emb_width});
    Rng rng(cfg.seed);
    net.init(rng);
    const TimeEmbedding emb = net.time_embedding();

    const bool is_edm = cfg.formulation == Formulation::Edm;
    NoiseSchedule sched = is_edm
                              ? make_edm_schedule(cfg.sigma_min, cfg.sigma_max, cfg.rho,
                                                  cfg.sigma_data)
                              : make_ddpm_schedule(cfg.T, cfg.beta_min, cfg.beta_max);

    AdamState adam;
    const AdamConfig adam_cfg{.lr = cfg.lr,
                              .beta1 = cfg.adam_beta1,
                              .beta2 = cfg.adam_beta2,
                              .eps = cfg.adam_eps};

    TrainResult result;
    result.metrics.reserve(cfg.steps);

    for (int step = 1; step <= cfg.steps; ++step) {
        // fixed draw order: batch indices, per-sample noise level, noise field
        std::vector<std::size_t> idx(cfg.batch);
        for (auto& i : idx) i = rng.uniform_int(data.images.size());
        std::vector<int> ts(cfg.batch);
        std::vector<double> sigmas(cfg.batch);
        if (is_edm) {
            for (auto& s : sigmas) s = sample_sigma_train(rng, sched);
        } else {
            for (auto& t : ts) t = 1 + static_cast<int>(rng.uniform_int(cfg.T));
        }
        Tensor x0 = batch_to_tensor(data, idx);
        Tensor eps = gaussian_like(cfg.batch, data.rows, data.cols, rng);
        Tensor x_noisy = is_edm ? edm_noise(x0, eps, sigmas) : forward_diffuse(x0, eps, ts, sched);

        std::vector<double> emb_rows;
        emb_rows.reserve(static_cast<std::size_t>(cfg.batch) * emb.width);
        for (int b = 0; b < cfg.batch; ++b) {
            const auto row = is_edm ? embed_sigma(sigmas[b], emb)
                                    : embed_time(static_cast<double>(ts[b]), emb);
            emb_rows.insert(emb_rows.end(), row.begin(), row.end());
        }
        Tensor t_emb = Tensor::from({cfg.batch, emb.width}, std::move(emb_rows));

        Tensor eps_pred = net.forward(x_noisy, t_emb);
        Tensor denoise_ps = is_edm
                                ? edm_loss_per_sample(eps, eps_pred, sigmas, cfg.sigma_data)
                                : ddpm_loss_per_sample(eps, eps_pred);

        LossBreakdown breakdown;
        if (cfg.spectral == SpectralKind::None) {
            auto denoise = mean_over_batch(denoise_ps);
            breakdown.denoise = denoise.values()[0];
            breakdown.spectral = 0.0;
            breakdown.lambda = 0.0;
            breakdown.total_node = denoise;
            breakdown.total = breakdown.denoise;
        } else {
            Tensor xhat0 = is_edm
                               ? spectral_supervision_target_edm(x_noisy, eps_pred, sigmas)
                               : spectral_supervision_target(x_noisy, eps_pred, sched, ts);
            Tensor spectral_ps = spectral_term_per_sample(cfg, x0, xhat0);
            if (cfg.lambda_mode == LambdaMode::EdmWeighted) {
                std::vector<double> lam(cfg.batch);
                for (int b = 0; b < cfg.batch; ++b)
                    lam[b] = edm_weight(sigmas[b], cfg.sigma_data);
                breakdown = total_loss_edm_weighted(denoise_ps, spectral_ps, lam);
            } else {
                breakdown = total_loss(mean_over_batch(denoise_ps),
                                       mean_over_batch(spectral_ps), cfg.lambda);
            }
        }

        if (!std::isfinite(breakdown.total))
            throw DivergenceError("train: non-finite loss at step " + std::to_string(step) +
                                  " (denoise " + std::to_string(breakdown.denoise) +
                                  ", spectral " + std::to_string(breakdown.spectral) + ")");

        net.zero_grad();
        backward(breakdown.total_node);
        adam_step(net.parameters(), adam, adam_cfg);

        result.metrics.push_back({step, breakdown.denoise, breakdown.spectral, breakdown.lambda,
                                  breakdown.total});

        if (on_eval && (step % cfg.eval_every == 0 || step == cfg.steps))
            on_eval(step, make_checkpoint(net, cfg.echo()));
    }

    result.checkpoint = make_checkpoint(net, cfg.echo());
    return result;
}

}  // namespace specdiff
