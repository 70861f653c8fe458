#include "specdiff/fft.hpp"

#include <cmath>
#include <cstdint>

#include "specdiff/error.hpp"

namespace specdiff {

static bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

static void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// Chirp-z (Bluestein) transform for arbitrary lengths, built on the radix-2
// path. Chirp angles use n^2 mod 2N to stay exact for large indices.
static void fft_bluestein(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<std::complex<double>> chirp(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t sq = (static_cast<std::uint64_t>(i) * i) % (2 * n);
        const double ang = sign * M_PI * static_cast<double>(sq) / static_cast<double>(n);
        chirp[i] = {std::cos(ang), std::sin(ang)};
    }
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;
    std::vector<std::complex<double>> fa(m, {0.0, 0.0});
    std::vector<std::complex<double>> fb(m, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) fa[i] = a[i] * chirp[i];
    for (std::size_t i = 0; i < n; ++i) {
        fb[i] = std::conj(chirp[i]);
        if (i != 0) fb[m - i] = std::conj(chirp[i]);
    }
    fft_radix2(fa, false);
    fft_radix2(fb, false);
    for (std::size_t i = 0; i < m; ++i) fa[i] *= fb[i];
    fft_radix2(fa, true);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < n; ++i) a[i] = fa[i] * inv_m * chirp[i];
}

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    if (a.size() <= 1) return;
    if (is_pow2(a.size()))
        fft_radix2(a, inverse);
    else
        fft_bluestein(a, inverse);
}

void dft2_inplace(std::vector<std::complex<double>>& a, int rows, int cols, bool inverse) {
    std::vector<std::complex<double>> buf;
    if (cols > 1) {
        buf.resize(cols);
        for (int r = 0; r < rows; ++r) {
            auto* row = a.data() + static_cast<std::size_t>(r) * cols;
            buf.assign(row, row + cols);
            fft_inplace(buf, inverse);
            std::copy(buf.begin(), buf.end(), row);
        }
    }
    if (rows > 1) {
        buf.resize(rows);
        for (int c = 0; c < cols; ++c) {
            for (int r = 0; r < rows; ++r) buf[r] = a[static_cast<std::size_t>(r) * cols + c];
            fft_inplace(buf, inverse);
            for (int r = 0; r < rows; ++r) a[static_cast<std::size_t>(r) * cols + c] = buf[r];
        }
    }
}

static void polar_of(const std::complex<double>& v, double& amp, double& ph) {
    amp = std::abs(v);
    ph = amp == 0.0 ? 0.0 : std::atan2(v.imag(), v.real());
}

Spectrum dft(const Grid& x) {
    if (x.data.empty()) throw UsageError("dft: empty input");
    Spectrum s;
    s.rows = x.rows;
    s.cols = x.cols;
    s.coeffs.assign(x.data.begin(), x.data.end());
    dft2_inplace(s.coeffs, s.rows, s.cols, false);
    s.amplitude.resize(s.coeffs.size());
    s.phase.resize(s.coeffs.size());
    for (std::size_t i = 0; i < s.coeffs.size(); ++i)
        polar_of(s.coeffs[i], s.amplitude[i], s.phase[i]);
    return s;
}

Grid idft(const Spectrum& s) {
    if (s.coeffs.empty()) throw UsageError("idft: empty spectrum");
    // Hermitian symmetry check: X(-w) == conj(X(w)) relative to the peak bin.
    double peak = 0.0;
    for (const auto& c : s.coeffs) peak = std::max(peak, std::abs(c));
    const double tol = 1e-8 * std::max(peak, 1e-300);
    for (int r = 0; r < s.rows; ++r) {
        for (int c = 0; c < s.cols; ++c) {
            const int rm = (s.rows - r) % s.rows;
            const int cm = (s.cols - c) % s.cols;
            const auto& a = s.coeffs[static_cast<std::size_t>(r) * s.cols + c];
            const auto& b = s.coeffs[static_cast<std::size_t>(rm) * s.cols + cm];
            if (std::abs(a - std::conj(b)) > tol)
                throw ValidationError("idft: coefficients are not Hermitian-symmetric");
        }
    }
    std::vector<std::complex<double>> a = s.coeffs;
    dft2_inplace(a, s.rows, s.cols, true);
    Grid out;
    out.rows = s.rows;
    out.cols = s.cols;
    out.data.resize(a.size());
    const double inv_n = 1.0 / static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a[i].real() * inv_n;
    return out;
}

std::pair<Grid, Grid> polar(const Spectrum& s) {
    Grid amp, ph;
    amp.rows = ph.rows = s.rows;
    amp.cols = ph.cols = s.cols;
    amp.data.resize(s.size());
    ph.data.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) polar_of(s.coeffs[i], amp.data[i], ph.data[i]);
    return {std::move(amp), std::move(ph)};
}

}  // namespace specdiff
