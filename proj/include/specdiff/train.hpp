#pragma once

#include <functional>
#include <string>
#include <vector>

#include "specdiff/checkpoint.hpp"
#include "specdiff/config.hpp"
#include "specdiff/grid.hpp"

namespace specdiff {

struct Dataset {
    int rows = 0;
    int cols = 0;
    std::vector<Grid> images;  // values in [-1, +1]
};

// Reads every *.pgm in a directory (sorted by filename). All images must
// share one geometry.
Dataset load_dataset_dir(const std::string& dir);

struct MetricsRow {
    int step = 0;
    double denoise = 0.0;
    double spectral = 0.0;
    double lambda = 0.0;
    double total = 0.0;
};

// header: step,loss_denoise,loss_spectral,lambda,loss_total
std::string metrics_csv(const std::vector<MetricsRow>& rows);

struct TrainResult {
    Checkpoint checkpoint;  // final parameters + config echo
    std::vector<MetricsRow> metrics;
};

// Runs the training loop: sample batch and noise level, corrupt, predict,
// combine the denoising and configured spectral terms, backprop, Adam.
// `on_eval` fires every cfg.eval_every steps and once at the end.
TrainResult train(const TrainConfig& cfg, const Dataset& data,
                  const std::function<void(int, const Checkpoint&)>& on_eval = nullptr);

}  // namespace specdiff
