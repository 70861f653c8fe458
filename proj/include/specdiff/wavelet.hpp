#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specdiff/grid.hpp"

namespace specdiff {

enum class Subband { Approx, Detail, LH, HL, HH };

const char* subband_name(Subband s);

// Two-channel analysis bank with adjoint-form synthesis: the synthesis pass
// reuses the analysis taps (upsample + convolve) and applies `gain` once per
// 1-D pass. `gain` is calibrated at construction from impulse responses so
// that synthesis(analysis(x)) == x exactly; construction fails for banks
// whose round trip is not a scalar multiple of the identity.
struct FilterBank {
    std::string name;
    std::vector<double> analysis_lo;
    std::vector<double> analysis_hi;
    std::vector<double> synthesis_lo;  // == analysis_lo for the banks built here
    std::vector<double> synthesis_hi;
    double gain = 1.0;
};

// Recognized names: "haar" (orthonormal, +-1/sqrt(2)) and "bior13"
// (analysis taps {1/2, 1/2} and {-1/2, 1/2}; calibrated gain 2).
FilterBank filter_bank(const std::string& name);

struct WaveletBand {
    int level = 0;  // 1 = finest
    Subband kind = Subband::Approx;
    int rows = 1;
    int cols = 0;
    std::vector<double> data;
};

struct WaveletPyramid {
    int levels = 0;
    std::string wavelet;
    int rows = 1;  // original signal shape
    int cols = 0;
    std::vector<WaveletBand> bands;  // approx band first, then details coarse-to-fine

    std::int64_t coefficient_count() const;
};

// Multi-level critically sampled DWT with periodic boundary extension.
// Each axis length must be divisible by 2^levels.
WaveletPyramid dwt(const Grid& x, const FilterBank& bank, int levels);
Grid idwt(const WaveletPyramid& p, const FilterBank& bank);

// ---- packed (in-place quadrant) layout used by the differentiable path ----

// Band placement inside the packed coefficient plane. 2-D sub-bands follow
// the (row filter, column filter) convention: LH = low-pass along rows,
// high-pass along columns.
struct PackedRegion {
    int level;
    Subband kind;
    int r0, c0, rows, cols;
};

std::vector<PackedRegion> packed_regions(int rows, int cols, int levels);

// Analysis into the packed layout, and its exact adjoint (transpose), both
// on raw row-major buffers of rows*cols doubles. The adjoint is what the
// loss gradient needs; idwt = adjoint with the calibrated gain applied.
void dwt_packed(const double* in, double* out, int rows, int cols, const FilterBank& bank,
                int levels);
void dwt_packed_adjoint(const double* in, double* out, int rows, int cols,
                        const FilterBank& bank, int levels, bool apply_gain);

// Throws ConfigError unless rows/cols admit `levels` periodic halvings.
void check_dwt_geometry(int rows, int cols, int levels);

}  // namespace specdiff
