#pragma once

#include <string>

#include "specdiff/grid.hpp"

namespace specdiff {

// Binary PGM (P5, maxval 255). Values map linearly between [-1, +1] and
// [0, 255]; writing clamps and rounds half-up, so -1 -> 0, 0 -> 128,
// +1 -> 255.
void write_pgm(const Grid& img, const std::string& path);
Grid read_pgm(const std::string& path);

}  // namespace specdiff
