#pragma once

#include <cstdint>
#include <vector>

#include "specdiff/grid.hpp"

namespace specdiff {

struct CheckerboardConfig {
    int count = 1;
    int size = 64;
    int tile = 8;  // tile edge k in pixels; the pattern period is 2k
    std::uint64_t seed = 0;
    double low = -1.0;
    double high = 1.0;
};

// 2k-periodic two-tone square patterns with independent uniform integer
// shifts in [0, 2k)^2 per image. With 2k dividing size, the per-axis
// fundamental sits at size/(2k) cycles per image.
std::vector<Grid> gen_checkerboard(const CheckerboardConfig& cfg);

}  // namespace specdiff
