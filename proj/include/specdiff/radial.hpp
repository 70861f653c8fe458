#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "specdiff/grid.hpp"

namespace specdiff {

struct RadialBin {
    int radius = 0;
    double mean_power = 0.0;
    std::int64_t count = 0;
};

// Radially averaged power spectrum. Bins are indexed by the nearest-integer
// distance from the DC bin after centering; by default every coefficient is
// binned (radii up to round(hypot(H/2, W/2))), so that
// sum(mean_power * count) equals the total spectral power.
struct RadialProfile {
    std::vector<RadialBin> bins;

    double total_power() const;
    std::string to_csv() const;  // header: bin,mean_power,count
};

RadialProfile radial_power_spectrum(const Grid& x, std::optional<int> n_bins = {});

// Same binning applied to an existing |X|^2 plane in raw DFT bin order
// (used for dataset-mean spectra).
RadialProfile radial_profile_of_power(const Grid& power, std::optional<int> n_bins = {});

}  // namespace specdiff
