#include "specdiff/nn.hpp"

#include <cmath>

#include "specdiff/error.hpp"

namespace specdiff {

// ---- time embedding ----

static std::vector<double> embed_value(double v, const TimeEmbedding& emb) {
    if (emb.width <= 0 || emb.width % 2 != 0)
        throw ConfigError("time embedding width must be a positive even integer, got " +
                          std::to_string(emb.width));
    if (emb.base <= 0.0) throw ConfigError("time embedding base must be positive");
    std::vector<double> out(emb.width);
    const int half = emb.width / 2;
    for (int j = 0; j < half; ++j) {
        const double freq = std::pow(emb.base, -2.0 * j / static_cast<double>(emb.width));
        out[2 * j] = std::sin(freq * v);
        out[2 * j + 1] = std::cos(freq * v);
    }
    return out;
}

std::vector<double> embed_time(double t, const TimeEmbedding& emb) {
    if (t < 0.0) throw UsageError("embed_time: t must be >= 0");
    return embed_value(t, emb);
}

std::vector<double> embed_sigma(double sigma, const TimeEmbedding& emb) {
    if (sigma <= 0.0) throw UsageError("embed_sigma: sigma must be > 0");
    return embed_value(std::log(sigma), emb);
}

// ---- 3x3 circular convolution ----

// dst[y][x] += sum_{ky,kx} wk[ky*3+kx] * src[(y+ky-1) mod H][(x+kx-1) mod W]
static void conv_plane_add(const double* src, double* dst, int h, int w, const double* wk) {
    if (w == 1) {
        for (int ky = 0; ky < 3; ++ky) {
            const double wv = wk[ky * 3 + 0] + wk[ky * 3 + 1] + wk[ky * 3 + 2];
            for (int y = 0; y < h; ++y) dst[y] += wv * src[(y + ky - 1 + h) % h];
        }
        return;
    }
    const double w00 = wk[0], w01 = wk[1], w02 = wk[2];
    const double w10 = wk[3], w11 = wk[4], w12 = wk[5];
    const double w20 = wk[6], w21 = wk[7], w22 = wk[8];
    for (int y = 0; y < h; ++y) {
        const double* s0 = src + static_cast<std::size_t>((y - 1 + h) % h) * w;
        const double* s1 = src + static_cast<std::size_t>(y) * w;
        const double* s2 = src + static_cast<std::size_t>((y + 1) % h) * w;
        double* d = dst + static_cast<std::size_t>(y) * w;
        d[0] += w00 * s0[w - 1] + w01 * s0[0] + w02 * s0[1] +
                w10 * s1[w - 1] + w11 * s1[0] + w12 * s1[1] +
                w20 * s2[w - 1] + w21 * s2[0] + w22 * s2[1];
        for (int x = 1; x < w - 1; ++x) {
            d[x] += w00 * s0[x - 1] + w01 * s0[x] + w02 * s0[x + 1] +
                    w10 * s1[x - 1] + w11 * s1[x] + w12 * s1[x + 1] +
                    w20 * s2[x - 1] + w21 * s2[x] + w22 * s2[x + 1];
        }
        d[w - 1] += w00 * s0[w - 2] + w01 * s0[w - 1] + w02 * s0[0] +
                    w10 * s1[w - 2] + w11 * s1[w - 1] + w12 * s1[0] +
                    w20 * s2[w - 2] + w21 * s2[w - 1] + w22 * s2[0];
    }
}

// tap accumulation for the weight gradient:
// acc[ky*3+kx] += sum_{y,x} g[y][x] * src[(y+ky-1) mod H][(x+kx-1) mod W]
static void conv_weight_grad_add(const double* src, const double* g, int h, int w, double* acc) {
    if (w == 1) {
        for (int ky = 0; ky < 3; ++ky) {
            double s = 0.0;
            for (int y = 0; y < h; ++y) s += g[y] * src[(y + ky - 1 + h) % h];
            acc[ky * 3 + 0] += s;
            acc[ky * 3 + 1] += s;
            acc[ky * 3 + 2] += s;
        }
        return;
    }
    double t[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
    for (int y = 0; y < h; ++y) {
        const double* s0 = src + static_cast<std::size_t>((y - 1 + h) % h) * w;
        const double* s1 = src + static_cast<std::size_t>(y) * w;
        const double* s2 = src + static_cast<std::size_t>((y + 1) % h) * w;
        const double* gr = g + static_cast<std::size_t>(y) * w;
        t[0] += gr[0] * s0[w - 1];
        t[3] += gr[0] * s1[w - 1];
        t[6] += gr[0] * s2[w - 1];
        t[2] += gr[w - 1] * s0[0];
        t[5] += gr[w - 1] * s1[0];
        t[8] += gr[w - 1] * s2[0];
        t[1] += gr[0] * s0[0] + gr[w - 1] * s0[w - 1];
        t[4] += gr[0] * s1[0] + gr[w - 1] * s1[w - 1];
        t[7] += gr[0] * s2[0] + gr[w - 1] * s2[w - 1];
        double a0 = 0, a1 = 0, a2 = 0, a3 = 0, a4 = 0, a5 = 0, a6 = 0, a7 = 0, a8 = 0;
        for (int x = 1; x < w - 1; ++x) {
            const double gv = gr[x];
            a0 += gv * s0[x - 1];
            a1 += gv * s0[x];
            a2 += gv * s0[x + 1];
            a3 += gv * s1[x - 1];
            a4 += gv * s1[x];
            a5 += gv * s1[x + 1];
            a6 += gv * s2[x - 1];
            a7 += gv * s2[x];
            a8 += gv * s2[x + 1];
        }
        t[0] += a0 + gr[w - 1] * s0[w - 2];
        t[1] += a1;
        t[2] += a2 + gr[0] * s0[1];
        t[3] += a3 + gr[w - 1] * s1[w - 2];
        t[4] += a4;
        t[5] += a5 + gr[0] * s1[1];
        t[6] += a6 + gr[w - 1] * s2[w - 2];
        t[7] += a7;
        t[8] += a8 + gr[0] * s2[1];
    }
    for (int k = 0; k < 9; ++k) acc[k] += t[k];
}

Tensor conv3x3_circular(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.rank() != 4)
        throw ConfigError("conv3x3_circular: input must be [B,C,H,W]");
    const int batch = x.shape()[0], ic = x.shape()[1], h = x.shape()[2], wd = x.shape()[3];
    if (w.rank() != 4 || w.shape()[1] != ic || w.shape()[2] != 3 || w.shape()[3] != 3)
        throw ConfigError("conv3x3_circular: weight/input channel mismatch (weight expects " +
                          std::to_string(w.shape()[1]) + " channels, input has " +
                          std::to_string(ic) + ")");
    const int oc = w.shape()[0];
    if (b.size() != oc)
        throw ConfigError("conv3x3_circular: bias size " + std::to_string(b.size()) +
                          " != out channels " + std::to_string(oc));

    const std::size_t plane = static_cast<std::size_t>(h) * wd;
    std::vector<double> out(static_cast<std::size_t>(batch) * oc * plane);
    const double* px = x.data();
    const double* pw = w.data();
    const double* pb = b.data();
    for (int n = 0; n < batch; ++n) {
        for (int o = 0; o < oc; ++o) {
            double* dst = out.data() + (static_cast<std::size_t>(n) * oc + o) * plane;
            std::fill(dst, dst + plane, pb[o]);
            for (int i = 0; i < ic; ++i) {
                const double* src = px + (static_cast<std::size_t>(n) * ic + i) * plane;
                const double* wk = pw + (static_cast<std::size_t>(o) * ic + i) * 9;
                conv_plane_add(src, dst, h, wd, wk);
            }
        }
    }

    return make_op(
        {batch, oc, h, wd}, std::move(out), {x, w, b},
        [batch, ic, oc, h, wd, plane](detail::Node& self) {
            const auto& xv = self.parents[0]->values;
            const auto& wv = self.parents[1]->values;
            const double* g = self.grad.data();
            if (self.parents[2]->requires_grad) {
                double* gb = self.parents[2]->grad_data();
                for (int n = 0; n < batch; ++n)
                    for (int o = 0; o < oc; ++o) {
                        const double* gp = g + (static_cast<std::size_t>(n) * oc + o) * plane;
                        double s = 0.0;
                        for (std::size_t i = 0; i < plane; ++i) s += gp[i];
                        gb[o] += s;
                    }
            }
            if (self.parents[0]->requires_grad) {
                double* gx = self.parents[0]->grad_data();
                for (int n = 0; n < batch; ++n)
                    for (int i = 0; i < ic; ++i) {
                        double* dst = gx + (static_cast<std::size_t>(n) * ic + i) * plane;
                        for (int o = 0; o < oc; ++o) {
                            const double* gp = g + (static_cast<std::size_t>(n) * oc + o) * plane;
                            const double* wk = wv.data() + (static_cast<std::size_t>(o) * ic + i) * 9;
                            // transpose of the forward = convolution with the
                            // 180-degree-rotated kernel
                            double flipped[9];
                            for (int k = 0; k < 9; ++k) flipped[k] = wk[8 - k];
                            conv_plane_add(gp, dst, h, wd, flipped);
                        }
                    }
            }
            if (self.parents[1]->requires_grad) {
                double* gw = self.parents[1]->grad_data();
                for (int n = 0; n < batch; ++n)
                    for (int o = 0; o < oc; ++o) {
                        const double* gp = g + (static_cast<std::size_t>(n) * oc + o) * plane;
                        for (int i = 0; i < ic; ++i) {
                            const double* src =
                                xv.data() + (static_cast<std::size_t>(n) * ic + i) * plane;
                            conv_weight_grad_add(src, gp, h, wd,
                                                 gw + (static_cast<std::size_t>(o) * ic + i) * 9);
                        }
                    }
            }
        });
}

Tensor linear(const Tensor& v, const Tensor& w, const Tensor& b) {
    if (v.rank() != 2 || w.rank() != 2 || v.shape()[1] != w.shape()[1])
        throw ConfigError("linear: expected v[B,E] and w[C,E] with matching E");
    const int batch = v.shape()[0], e = v.shape()[1], c = w.shape()[0];
    if (b.size() != c) throw ConfigError("linear: bias size mismatch");
    std::vector<double> out(static_cast<std::size_t>(batch) * c);
    for (int n = 0; n < batch; ++n)
        for (int j = 0; j < c; ++j) {
            double s = b.data()[j];
            for (int k = 0; k < e; ++k)
                s += w.data()[static_cast<std::size_t>(j) * e + k] *
                     v.data()[static_cast<std::size_t>(n) * e + k];
            out[static_cast<std::size_t>(n) * c + j] = s;
        }
    return make_op({batch, c}, std::move(out), {v, w, b}, [batch, e, c](detail::Node& self) {
        const auto& vv = self.parents[0]->values;
        const auto& wv = self.parents[1]->values;
        const double* g = self.grad.data();
        if (self.parents[0]->requires_grad) {
            double* gv = self.parents[0]->grad_data();
            for (int n = 0; n < batch; ++n)
                for (int j = 0; j < c; ++j)
                    for (int k = 0; k < e; ++k)
                        gv[static_cast<std::size_t>(n) * e + k] +=
                            g[static_cast<std::size_t>(n) * c + j] *
                            wv[static_cast<std::size_t>(j) * e + k];
        }
        if (self.parents[1]->requires_grad) {
            double* gw = self.parents[1]->grad_data();
            for (int n = 0; n < batch; ++n)
                for (int j = 0; j < c; ++j)
                    for (int k = 0; k < e; ++k)
                        gw[static_cast<std::size_t>(j) * e + k] +=
                            g[static_cast<std::size_t>(n) * c + j] *
                            vv[static_cast<std::size_t>(n) * e + k];
        }
        if (self.parents[2]->requires_grad) {
            double* gb = self.parents[2]->grad_data();
            for (int n = 0; n < batch; ++n)
                for (int j = 0; j < c; ++j) gb[j] += g[static_cast<std::size_t>(n) * c + j];
        }
    });
}

Tensor add_channel_bias(const Tensor& x, const Tensor& v) {
    if (x.rank() != 4 || v.rank() != 2 || x.shape()[0] != v.shape()[0] ||
        x.shape()[1] != v.shape()[1])
        throw ConfigError("add_channel_bias: expected x[B,C,H,W] and v[B,C]");
    const int batch = x.shape()[0], c = x.shape()[1];
    const std::size_t plane = static_cast<std::size_t>(x.shape()[2]) * x.shape()[3];
    std::vector<double> out(x.values().begin(), x.values().end());
    for (int n = 0; n < batch; ++n)
        for (int j = 0; j < c; ++j) {
            const double add = v.data()[static_cast<std::size_t>(n) * c + j];
            double* dst = out.data() + (static_cast<std::size_t>(n) * c + j) * plane;
            for (std::size_t i = 0; i < plane; ++i) dst[i] += add;
        }
    return make_op(x.shape(), std::move(out), {x, v}, [batch, c, plane](detail::Node& self) {
        if (self.parents[0]->requires_grad) self.parents[0]->accumulate(self.grad);
        if (self.parents[1]->requires_grad) {
            double* gv = self.parents[1]->grad_data();
            for (int n = 0; n < batch; ++n)
                for (int j = 0; j < c; ++j) {
                    const double* gp =
                        self.grad.data() + (static_cast<std::size_t>(n) * c + j) * plane;
                    double s = 0.0;
                    for (std::size_t i = 0; i < plane; ++i) s += gp[i];
                    gv[static_cast<std::size_t>(n) * c + j] += s;
                }
        }
    });
}

// ---- denoiser ----

DenoiserNet::DenoiserNet(DenoiserConfig cfg) : cfg_(cfg) {
    if (cfg_.channels < 1 || cfg_.blocks < 0)
        throw ConfigError("DenoiserNet: channels must be >= 1 and blocks >= 0");
    if (cfg_.emb_width <= 0 || cfg_.emb_width % 2 != 0)
        throw ConfigError("DenoiserNet: emb_width must be a positive even integer");
    const int c = cfg_.channels;
    params_.emplace_back("lift.w", Tensor::zeros({c, 1, 3, 3}, true));
    params_.emplace_back("lift.b", Tensor::zeros({c}, true));
    params_.emplace_back("temb.w", Tensor::zeros({c, cfg_.emb_width}, true));
    params_.emplace_back("temb.b", Tensor::zeros({c}, true));
    for (int i = 0; i < cfg_.blocks; ++i) {
        params_.emplace_back("block" + std::to_string(i) + ".w", Tensor::zeros({c, c, 3, 3}, true));
        params_.emplace_back("block" + std::to_string(i) + ".b", Tensor::zeros({c}, true));
    }
    params_.emplace_back("proj.w", Tensor::zeros({1, c, 3, 3}, true));
    params_.emplace_back("proj.b", Tensor::zeros({1}, true));
}

static void fill_uniform(Tensor& t, double bound, Rng& rng) {
    double* p = t.data();
    for (std::int64_t i = 0; i < t.size(); ++i) p[i] = bound * (2.0 * rng.uniform() - 1.0);
}

void DenoiserNet::init(Rng& rng) {
    for (auto& [name, t] : params_) {
        if (name == "lift.w") {
            fill_uniform(t, 1.0 / std::sqrt(9.0), rng);
        } else if (name == "temb.w") {
            fill_uniform(t, 1.0 / std::sqrt(static_cast<double>(cfg_.emb_width)), rng);
        } else if (name.starts_with("block") && name.ends_with(".w")) {
            fill_uniform(t, 1.0 / std::sqrt(9.0 * cfg_.channels), rng);
        } else {
            // biases and the final projection stay zero
            std::fill(t.data(), t.data() + t.size(), 0.0);
        }
    }
}

Tensor DenoiserNet::param(const std::string& name) const {
    for (const auto& [n, t] : params_)
        if (n == name) return t;
    throw UsageError("DenoiserNet: no parameter named '" + name + "'");
}

void DenoiserNet::zero_grad() {
    for (auto& [name, t] : params_) t.zero_grad();
}

Tensor DenoiserNet::forward(const Tensor& x, const Tensor& t_emb) const {
    if (x.rank() != 4 || x.shape()[1] != 1)
        throw ConfigError("DenoiserNet::forward: expected x[B,1,H,W], got rank " +
                          std::to_string(x.rank()));
    if (t_emb.rank() != 2 || t_emb.shape()[0] != x.shape()[0] ||
        t_emb.shape()[1] != cfg_.emb_width)
        throw ConfigError("DenoiserNet::forward: time embedding must be [" +
                          std::to_string(x.shape()[0]) + "," + std::to_string(cfg_.emb_width) +
                          "], got [" + std::to_string(t_emb.shape()[0]) + "," +
                          std::to_string(t_emb.rank() == 2 ? t_emb.shape()[1] : -1) + "]");

    Tensor h = conv3x3_circular(x, param("lift.w"), param("lift.b"));
    h = add_channel_bias(h, linear(t_emb, param("temb.w"), param("temb.b")));
    for (int i = 0; i < cfg_.blocks; ++i) {
        const std::string prefix = "block" + std::to_string(i);
        h = add(h, conv3x3_circular(silu(h), param(prefix + ".w"), param(prefix + ".b")));
    }
    return conv3x3_circular(h, param("proj.w"), param("proj.b"));
}

// ---- Adam ----

void adam_step(std::vector<std::pair<std::string, Tensor>>& params, AdamState& state,
               const AdamConfig& cfg) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i].second.size(), 0.0);
            state.v[i].assign(params[i].second.size(), 0.0);
        }
    }
    if (state.m.size() != params.size())
        throw UsageError("adam_step: optimizer state does not match parameter list");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (static_cast<std::int64_t>(state.m[i].size()) != params[i].second.size())
            throw UsageError("adam_step: state shape mismatch for parameter '" +
                             params[i].first + "'");
        for (double g : params[i].second.grad())
            if (!std::isfinite(g))
                throw DivergenceError("adam_step: non-finite gradient for parameter '" +
                                      params[i].first + "'");
    }

    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].second;
        auto g = p.grad();
        double* m = state.m[i].data();
        double* v = state.v[i].data();
        double* w = p.data();
        for (std::int64_t k = 0; k < p.size(); ++k) {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            w[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

// ---- gradient check ----

GradCheckReport grad_check(
    DenoiserNet& net, const std::function<Tensor(DenoiserNet&)>& loss_fn, double tolerance,
    double fd_step,
    const std::function<void(const std::string&, std::vector<double>&)>& tamper) {
    net.zero_grad();
    backward(loss_fn(net));
    std::vector<std::vector<double>> analytic;
    for (auto& [name, p] : net.parameters()) {
        analytic.emplace_back(p.grad().begin(), p.grad().end());
        if (tamper) tamper(name, analytic.back());
    }

    GradCheckReport report;
    report.tolerance = tolerance;
    NoGradGuard guard;
    std::size_t idx = 0;
    for (auto& [name, p] : net.parameters()) {
        GradCheckEntry entry{name, 0.0};
        double* w = p.data();
        for (std::int64_t k = 0; k < p.size(); ++k) {
            const double orig = w[k];
            w[k] = orig + fd_step;
            const double fp = loss_fn(net).item();
            w[k] = orig - fd_step;
            const double fm = loss_fn(net).item();
            w[k] = orig;
            const double fd = (fp - fm) / (2.0 * fd_step);
            const double ad = analytic[idx][k];
            const double mag = std::max(std::abs(ad), std::abs(fd));
            if (mag > 1e-8) entry.max_rel_err = std::max(entry.max_rel_err, std::abs(ad - fd) / mag);
        }
        report.worst = std::max(report.worst, entry.max_rel_err);
        report.per_param.push_back(std::move(entry));
        ++idx;
    }
    report.pass = report.worst <= tolerance;
    return report;
}

}  // namespace specdiff
