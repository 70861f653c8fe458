#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "specdiff/rng.hpp"
#include "specdiff/tensor.hpp"

namespace specdiff {

// Sinusoidal conditioning vector: interleaved [sin, cos] pairs at
// geometrically spaced frequencies base^(-2j/width).
struct TimeEmbedding {
    int width = 32;        // even
    double base = 10000.0;
};

std::vector<double> embed_time(double t, const TimeEmbedding& emb);       // t >= 0
std::vector<double> embed_sigma(double sigma, const TimeEmbedding& emb);  // embeds ln(sigma)

// ---- differentiable building blocks ----

// 3x3 convolution with circular (wrap-around) padding.
// x: [B, IC, H, W], w: [OC, IC, 3, 3], b: [OC] -> [B, OC, H, W]
Tensor conv3x3_circular(const Tensor& x, const Tensor& w, const Tensor& b);

// v: [B, E], w: [C, E], b: [C] -> [B, C]
Tensor linear(const Tensor& v, const Tensor& w, const Tensor& b);

// x: [B, C, H, W] + per-(sample, channel) offsets v: [B, C]
Tensor add_channel_bias(const Tensor& x, const Tensor& v);

struct DenoiserConfig {
    int channels = 32;
    int blocks = 3;
    int emb_width = 32;
    double emb_base = 10000.0;
};

// Noise-prediction network: lifting conv -> blocks x (x + conv(silu(x)))
// -> projection conv, with the mapped time embedding added channel-wise
// after the lift. The projection is zero-initialized, so a fresh net
// predicts exactly zero.
class DenoiserNet {
  public:
    explicit DenoiserNet(DenoiserConfig cfg);

    void init(Rng& rng);  // fan-in uniform conv weights, zero biases, zero projection

    // x: [B, 1, H, W], t_emb: [B, emb_width] -> [B, 1, H, W]
    Tensor forward(const Tensor& x, const Tensor& t_emb) const;

    std::vector<std::pair<std::string, Tensor>>& parameters() { return params_; }
    const std::vector<std::pair<std::string, Tensor>>& parameters() const { return params_; }
    Tensor param(const std::string& name) const;
    void zero_grad();

    const DenoiserConfig& config() const { return cfg_; }
    TimeEmbedding time_embedding() const { return {cfg_.emb_width, cfg_.emb_base}; }

  private:
    DenoiserConfig cfg_;
    std::vector<std::pair<std::string, Tensor>> params_;
};

// ---- optimizer ----

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    long step = 0;
};

// One bias-corrected Adam update over the named parameter list. A non-finite
// gradient aborts before any parameter is touched, naming the offender.
void adam_step(std::vector<std::pair<std::string, Tensor>>& params, AdamState& state,
               const AdamConfig& cfg);

// ---- gradient verification ----

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> per_param;
    double worst = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// Compares autodiff parameter gradients of loss_fn against central finite
// differences (only coordinates where either gradient exceeds 1e-8 count).
// `tamper` is a test fixture hook that may corrupt the captured analytic
// gradients before comparison.
GradCheckReport grad_check(
    DenoiserNet& net, const std::function<Tensor(DenoiserNet&)>& loss_fn, double tolerance,
    double fd_step = 1e-5,
    const std::function<void(const std::string&, std::vector<double>&)>& tamper = nullptr);

}  // namespace specdiff
