#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "specdiff/grid.hpp"

namespace specdiff {

// DFT convention: unnormalized forward (kernel e^{-2*pi*i*k*n/N}), inverse
// carries the 1/N factor. Parseval therefore reads sum|x|^2 = (1/N) sum|X|^2.
struct Spectrum {
    int rows = 1;
    int cols = 0;
    std::vector<std::complex<double>> coeffs;  // row-major, raw DFT bin order
    std::vector<double> amplitude;             // |X|
    std::vector<double> phase;                 // atan2(Im, Re), 0 where X == 0

    std::size_t size() const { return coeffs.size(); }
};

// Forward DFT of a real 1-D or 2-D signal. Power-of-two sizes take the
// radix-2 path; every other size goes through Bluestein's chirp transform.
Spectrum dft(const Grid& x);

// Inverse DFT back to a real signal. Rejects coefficient sets that are not
// Hermitian-symmetric within a small relative tolerance.
Grid idft(const Spectrum& s);

// Amplitude and phase planes of a spectrum (phase 0 at zero bins).
std::pair<Grid, Grid> polar(const Spectrum& s);

// ---- kernels shared with the differentiable loss path ----

// In-place complex FFT, any length >= 1, no normalization either direction.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

// 2-D transforms on row-major complex grids (rows == 1 covers 1-D).
void dft2_inplace(std::vector<std::complex<double>>& a, int rows, int cols, bool inverse);

}  // namespace specdiff
