#include "specdiff/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "specdiff/error.hpp"

namespace specdiff {

std::string to_string(Formulation f) { return f == Formulation::Ddpm ? "ddpm" : "edm"; }

std::string to_string(LambdaMode m) {
    return m == LambdaMode::Scalar ? "scalar" : "edm-weighted";
}

std::string to_string(SpectralKind k, const std::string& bank) {
    switch (k) {
        case SpectralKind::None: return "none";
        case SpectralKind::FourierAmplitude: return "amp";
        case SpectralKind::FourierAmpPhase: return "amp-phase";
        case SpectralKind::Wavelet: return bank;
    }
    return "none";
}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
}

}  // namespace

std::string TrainConfig::echo() const {
    std::ostringstream out;
    out << "formulation = " << to_string(formulation) << "\n";
    out << "spectral = " << to_string(spectral, wavelet_bank) << "\n";
    out << "lambda = " << fmt_double(lambda) << "\n";
    out << "lambda_mode = " << to_string(lambda_mode) << "\n";
    out << "steps = " << steps << "\n";
    out << "batch = " << batch << "\n";
    out << "lr = " << fmt_double(lr) << "\n";
    out << "seed = " << seed << "\n";
    out << "T = " << T << "\n";
    out << "beta_min = " << fmt_double(beta_min) << "\n";
    out << "beta_max = " << fmt_double(beta_max) << "\n";
    out << "sigma_min = " << fmt_double(sigma_min) << "\n";
    out << "sigma_max = " << fmt_double(sigma_max) << "\n";
    out << "rho = " << fmt_double(rho) << "\n";
    out << "sigma_data = " << fmt_double(sigma_data) << "\n";
    out << "wavelet_levels = " << wavelet_levels << "\n";
    out << "gamma_approx = " << fmt_double(gamma_approx) << "\n";
    out << "gamma_detail = " << fmt_double(gamma_detail) << "\n";
    out << "width = " << width << "\n";
    out << "blocks = " << blocks << "\n";
    out << "emb_width = " << emb_width << "\n";
    out << "eval_every = " << eval_every << "\n";
    out << "adam_beta1 = " << fmt_double(adam_beta1) << "\n";
    out << "adam_beta2 = " << fmt_double(adam_beta2) << "\n";
    out << "adam_eps = " << fmt_double(adam_eps) << "\n";
    out << "data = " << data << "\n";
    out << "out_dir = " << out_dir << "\n";
    return out.str();
}

TrainConfig TrainConfig::parse_text(const std::string& text) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "formulation") {
            if (val == "ddpm") cfg.formulation = Formulation::Ddpm;
            else if (val == "edm") cfg.formulation = Formulation::Edm;
            else throw ConfigError("config key 'formulation': expected ddpm or edm, got '" +
                                   val + "'");
        } else if (key == "spectral") {
            if (val == "none") cfg.spectral = SpectralKind::None;
            else if (val == "amp") cfg.spectral = SpectralKind::FourierAmplitude;
            else if (val == "amp-phase") cfg.spectral = SpectralKind::FourierAmpPhase;
            else if (val == "haar" || val == "bior13") {
                cfg.spectral = SpectralKind::Wavelet;
                cfg.wavelet_bank = val;
            } else
                throw ConfigError(
                    "config key 'spectral': expected none, amp, amp-phase, haar, or bior13, "
                    "got '" + val + "'");
        } else if (key == "lambda") {
            cfg.lambda = parse_double(key, val);
        } else if (key == "lambda_mode") {
            if (val == "scalar") cfg.lambda_mode = LambdaMode::Scalar;
            else if (val == "edm-weighted") cfg.lambda_mode = LambdaMode::EdmWeighted;
            else throw ConfigError(
                "config key 'lambda_mode': expected scalar or edm-weighted, got '" + val + "'");
        } else if (key == "steps") {
            cfg.steps = static_cast<int>(parse_int(key, val));
        } else if (key == "batch") {
            cfg.batch = static_cast<int>(parse_int(key, val));
        } else if (key == "lr") {
            cfg.lr = parse_double(key, val);
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_int(key, val));
        } else if (key == "T") {
            cfg.T = static_cast<int>(parse_int(key, val));
        } else if (key == "beta_min") {
            cfg.beta_min = parse_double(key, val);
        } else if (key == "beta_max") {
            cfg.beta_max = parse_double(key, val);
        } else if (key == "sigma_min") {
            cfg.sigma_min = parse_double(key, val);
        } else if (key == "sigma_max") {
            cfg.sigma_max = parse_double(key, val);
        } else if (key == "rho") {
            cfg.rho = parse_double(key, val);
        } else if (key == "sigma_data") {
            cfg.sigma_data = parse_double(key, val);
        } else if (key == "wavelet_levels") {
            cfg.wavelet_levels = static_cast<int>(parse_int(key, val));
        } else if (key == "gamma_approx") {
            cfg.gamma_approx = parse_double(key, val);
        } else if (key == "gamma_detail") {
            cfg.gamma_detail = parse_double(key, val);
        } else if (key == "width") {
            cfg.width = static_cast<int>(parse_int(key, val));
        } else if (key == "blocks") {
            cfg.blocks = static_cast<int>(parse_int(key, val));
        } else if (key == "emb_width") {
            cfg.emb_width = static_cast<int>(parse_int(key, val));
        } else if (key == "eval_every") {
            cfg.eval_every = static_cast<int>(parse_int(key, val));
        } else if (key == "adam_beta1") {
            cfg.adam_beta1 = parse_double(key, val);
        } else if (key == "adam_beta2") {
            cfg.adam_beta2 = parse_double(key, val);
        } else if (key == "adam_eps") {
            cfg.adam_eps = parse_double(key, val);
        } else if (key == "data") {
            cfg.data = val;
        } else if (key == "out_dir") {
            cfg.out_dir = val;
        } else {
            throw ConfigError("config: unknown key '" + key + "'");
        }
    }

    if (cfg.steps < 1) throw ConfigError("config key 'steps': must be >= 1");
    if (cfg.batch < 1) throw ConfigError("config key 'batch': must be >= 1");
    if (cfg.lambda < 0.0) throw ConfigError("config key 'lambda': must be >= 0");
    if (cfg.T < 1) throw ConfigError("config key 'T': must be >= 1");
    if (cfg.wavelet_levels < 1) throw ConfigError("config key 'wavelet_levels': must be >= 1");
    if (cfg.eval_every < 1) throw ConfigError("config key 'eval_every': must be >= 1");
    if (cfg.lambda_mode == LambdaMode::EdmWeighted && cfg.formulation != Formulation::Edm)
        throw ConfigError("config key 'lambda_mode': edm-weighted requires formulation = edm");
    return cfg;
}

TrainConfig TrainConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

}  // namespace specdiff
