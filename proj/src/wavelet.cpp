#include "specdiff/wavelet.hpp"

#include <cmath>
#include <cstring>

#include "specdiff/error.hpp"

namespace specdiff {

const char* subband_name(Subband s) {
    switch (s) {
        case Subband::Approx: return "LL";
        case Subband::Detail: return "D";
        case Subband::LH: return "LH";
        case Subband::HL: return "HL";
        case Subband::HH: return "HH";
    }
    return "?";
}

// a[m]        = sum_k lo[k] x[(2m+k) mod n]
// a[n/2 + m]  = sum_k hi[k] x[(2m+k) mod n]
static void analyze_1d(const double* x, double* out, int n, const std::vector<double>& lo,
                       const std::vector<double>& hi) {
    const int half = n / 2;
    for (int m = 0; m < half; ++m) {
        double s_lo = 0.0, s_hi = 0.0;
        for (std::size_t k = 0; k < lo.size(); ++k) {
            const double v = x[(2 * m + static_cast<int>(k)) % n];
            s_lo += lo[k] * v;
            s_hi += hi[k] * v;
        }
        out[m] = s_lo;
        out[half + m] = s_hi;
    }
}

// Exact transpose of analyze_1d; `scale` carries the synthesis gain.
static void adjoint_1d(const double* y, double* out, int n, const std::vector<double>& lo,
                       const std::vector<double>& hi, double scale) {
    const int half = n / 2;
    std::memset(out, 0, sizeof(double) * n);
    for (int m = 0; m < half; ++m) {
        const double a = y[m] * scale;
        const double d = y[half + m] * scale;
        for (std::size_t k = 0; k < lo.size(); ++k) {
            out[(2 * m + static_cast<int>(k)) % n] += lo[k] * a + hi[k] * d;
        }
    }
}

void check_dwt_geometry(int rows, int cols, int levels) {
    if (levels < 1) throw ConfigError("dwt: levels must be >= 1");
    const int div = 1 << levels;
    auto check_axis = [&](int n, const char* axis) {
        if (n % div != 0 || n / div < 1)
            throw ConfigError(std::string("dwt: ") + axis + " length " + std::to_string(n) +
                              " does not admit " + std::to_string(levels) +
                              " periodic halvings (must be a multiple of " + std::to_string(div) +
                              ")");
    };
    check_axis(cols, "column");
    if (rows > 1) check_axis(rows, "row");
}

static void level_forward(double* plane, int ld, int r, int c, const FilterBank& bank) {
    std::vector<double> buf(std::max(r, c));
    std::vector<double> tmp(std::max(r, c));
    for (int i = 0; i < r; ++i) {
        double* row = plane + static_cast<std::size_t>(i) * ld;
        analyze_1d(row, buf.data(), c, bank.analysis_lo, bank.analysis_hi);
        std::memcpy(row, buf.data(), sizeof(double) * c);
    }
    if (r > 1) {
        for (int j = 0; j < c; ++j) {
            for (int i = 0; i < r; ++i) tmp[i] = plane[static_cast<std::size_t>(i) * ld + j];
            analyze_1d(tmp.data(), buf.data(), r, bank.analysis_lo, bank.analysis_hi);
            for (int i = 0; i < r; ++i) plane[static_cast<std::size_t>(i) * ld + j] = buf[i];
        }
    }
}

static void level_adjoint(double* plane, int ld, int r, int c, const FilterBank& bank,
                          double scale) {
    std::vector<double> buf(std::max(r, c));
    std::vector<double> tmp(std::max(r, c));
    if (r > 1) {
        for (int j = 0; j < c; ++j) {
            for (int i = 0; i < r; ++i) tmp[i] = plane[static_cast<std::size_t>(i) * ld + j];
            adjoint_1d(tmp.data(), buf.data(), r, bank.synthesis_lo, bank.synthesis_hi, scale);
            for (int i = 0; i < r; ++i) plane[static_cast<std::size_t>(i) * ld + j] = buf[i];
        }
    }
    for (int i = 0; i < r; ++i) {
        double* row = plane + static_cast<std::size_t>(i) * ld;
        adjoint_1d(row, buf.data(), c, bank.synthesis_lo, bank.synthesis_hi, scale);
        std::memcpy(row, buf.data(), sizeof(double) * c);
    }
}

void dwt_packed(const double* in, double* out, int rows, int cols, const FilterBank& bank,
                int levels) {
    check_dwt_geometry(rows, cols, levels);
    if (out != in) std::memcpy(out, in, sizeof(double) * rows * cols);
    int r = rows, c = cols;
    for (int l = 0; l < levels; ++l) {
        level_forward(out, cols, r, c, bank);
        c /= 2;
        if (rows > 1) r /= 2;
    }
}

void dwt_packed_adjoint(const double* in, double* out, int rows, int cols,
                        const FilterBank& bank, int levels, bool apply_gain) {
    check_dwt_geometry(rows, cols, levels);
    if (out != in) std::memcpy(out, in, sizeof(double) * rows * cols);
    const double scale = apply_gain ? bank.gain : 1.0;
    for (int l = levels - 1; l >= 0; --l) {
        const int c = cols >> l;
        const int r = rows > 1 ? rows >> l : 1;
        level_adjoint(out, cols, r, c, bank, scale);
    }
}

std::vector<PackedRegion> packed_regions(int rows, int cols, int levels) {
    check_dwt_geometry(rows, cols, levels);
    std::vector<PackedRegion> regions;
    if (rows == 1) {
        regions.push_back({levels, Subband::Approx, 0, 0, 1, cols >> levels});
        for (int l = levels; l >= 1; --l)
            regions.push_back({l, Subband::Detail, 0, cols >> l, 1, cols >> l});
    } else {
        regions.push_back({levels, Subband::Approx, 0, 0, rows >> levels, cols >> levels});
        for (int l = levels; l >= 1; --l) {
            const int r = rows >> l, c = cols >> l;
            regions.push_back({l, Subband::LH, 0, c, r, c});
            regions.push_back({l, Subband::HL, r, 0, r, c});
            regions.push_back({l, Subband::HH, r, c, r, c});
        }
    }
    return regions;
}

std::int64_t WaveletPyramid::coefficient_count() const {
    std::int64_t n = 0;
    for (const auto& b : bands) n += static_cast<std::int64_t>(b.data.size());
    return n;
}

WaveletPyramid dwt(const Grid& x, const FilterBank& bank, int levels) {
    std::vector<double> packed(x.size());
    dwt_packed(x.data.data(), packed.data(), x.rows, x.cols, bank, levels);

    WaveletPyramid p;
    p.levels = levels;
    p.wavelet = bank.name;
    p.rows = x.rows;
    p.cols = x.cols;
    for (const auto& reg : packed_regions(x.rows, x.cols, levels)) {
        WaveletBand band;
        band.level = reg.level;
        band.kind = reg.kind;
        band.rows = reg.rows;
        band.cols = reg.cols;
        band.data.resize(static_cast<std::size_t>(reg.rows) * reg.cols);
        for (int i = 0; i < reg.rows; ++i)
            for (int j = 0; j < reg.cols; ++j)
                band.data[static_cast<std::size_t>(i) * reg.cols + j] =
                    packed[static_cast<std::size_t>(reg.r0 + i) * x.cols + (reg.c0 + j)];
        p.bands.push_back(std::move(band));
    }
    return p;
}

Grid idwt(const WaveletPyramid& p, const FilterBank& bank) {
    if (p.wavelet != bank.name)
        throw ValidationError("idwt: pyramid was built with wavelet '" + p.wavelet +
                              "', bank is '" + bank.name + "'");
    const auto regions = packed_regions(p.rows, p.cols, p.levels);
    if (regions.size() != p.bands.size())
        throw ValidationError("idwt: band count does not match pyramid geometry");
    std::vector<double> packed(static_cast<std::size_t>(p.rows) * p.cols);
    for (std::size_t b = 0; b < regions.size(); ++b) {
        const auto& reg = regions[b];
        const auto& band = p.bands[b];
        if (band.rows != reg.rows || band.cols != reg.cols || band.level != reg.level ||
            band.kind != reg.kind)
            throw ValidationError("idwt: band shape inconsistent with pyramid geometry");
        for (int i = 0; i < reg.rows; ++i)
            for (int j = 0; j < reg.cols; ++j)
                packed[static_cast<std::size_t>(reg.r0 + i) * p.cols + (reg.c0 + j)] =
                    band.data[static_cast<std::size_t>(i) * reg.cols + j];
    }
    Grid out;
    out.rows = p.rows;
    out.cols = p.cols;
    out.data.resize(packed.size());
    dwt_packed_adjoint(packed.data(), out.data.data(), p.rows, p.cols, bank, p.levels, true);
    return out;
}

// Calibrates the synthesis gain from single-level impulse responses on a
// length-16 signal: adjoint(analysis(delta_j)) must equal (1/gain) * delta_j
// at every position j, or the bank is rejected.
static double calibrate_gain(const FilterBank& bank) {
    const int n = 16;
    std::vector<double> x(n), y(n), z(n);
    double diag = 0.0;
    for (int j = 0; j < n; ++j) {
        std::fill(x.begin(), x.end(), 0.0);
        x[j] = 1.0;
        analyze_1d(x.data(), y.data(), n, bank.analysis_lo, bank.analysis_hi);
        adjoint_1d(y.data(), z.data(), n, bank.synthesis_lo, bank.synthesis_hi, 1.0);
        for (int i = 0; i < n; ++i) {
            if (i == j) continue;
            if (std::abs(z[i]) > 1e-12)
                throw ConfigError("filter bank '" + bank.name +
                                  "': impulse round trip is not diagonal");
        }
        if (j == 0) {
            diag = z[j];
            if (diag <= 0.0)
                throw ConfigError("filter bank '" + bank.name + "': non-positive round-trip gain");
        } else if (std::abs(z[j] - diag) > 1e-12) {
            throw ConfigError("filter bank '" + bank.name + "': round-trip gain is not uniform");
        }
    }
    return 1.0 / diag;
}

FilterBank filter_bank(const std::string& name) {
    FilterBank bank;
    bank.name = name;
    if (name == "haar") {
        const double c = 1.0 / std::sqrt(2.0);
        bank.analysis_lo = {c, c};
        bank.analysis_hi = {c, -c};
    } else if (name == "bior13") {
        bank.analysis_lo = {0.5, 0.5};
        bank.analysis_hi = {-0.5, 0.5};
    } else {
        throw ConfigError("filter_bank: unknown wavelet '" + name + "' (expected haar or bior13)");
    }
    bank.synthesis_lo = bank.analysis_lo;
    bank.synthesis_hi = bank.analysis_hi;
    bank.gain = calibrate_gain(bank);
    return bank;
}

}  // namespace specdiff
