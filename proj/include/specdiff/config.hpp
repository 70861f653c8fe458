#pragma once

#include <cstdint>
#include <string>

#include "specdiff/losses.hpp"

namespace specdiff {

enum class Formulation { Ddpm, Edm };
enum class LambdaMode { Scalar, EdmWeighted };

// Training configuration, read from plain-text `key = value` files with `#`
// comments. The full key reference lives in the README.
struct TrainConfig {
    Formulation formulation = Formulation::Ddpm;
    SpectralKind spectral = SpectralKind::None;
    std::string wavelet_bank = "haar";  // set via spectral = haar | bior13
    double lambda = 0.0;
    LambdaMode lambda_mode = LambdaMode::Scalar;

    int steps = 3000;
    int batch = 16;
    double lr = 1e-3;
    std::uint64_t seed = 0;

    int T = 200;
    double beta_min = 1e-4;
    double beta_max = 0.02;
    double sigma_min = 0.002;
    double sigma_max = 80.0;
    double rho = 7.0;
    double sigma_data = 0.5;

    int wavelet_levels = 2;
    double gamma_approx = 1.0;
    double gamma_detail = 1.0;

    int width = 32;  // denoiser channels
    int blocks = 3;
    int emb_width = 32;
    int eval_every = 500;

    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    std::string data;     // dataset directory of PGM files
    std::string out_dir;  // artifact directory

    // Canonical serialization; parse(echo()) reproduces the config exactly,
    // which keeps checkpoint round trips byte-identical.
    std::string echo() const;

    static TrainConfig parse_text(const std::string& text);
    static TrainConfig parse_file(const std::string& path);
};

std::string to_string(Formulation f);
std::string to_string(LambdaMode m);
std::string to_string(SpectralKind k, const std::string& bank);

}  // namespace specdiff
