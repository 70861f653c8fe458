#pragma once

#include <string>

#include "specdiff/radial.hpp"
#include "specdiff/train.hpp"

namespace specdiff {

// Spectral comparison of a generated set against a reference set, built on
// the radially averaged power spectra of the per-set mean power planes.
//
//   log_spectral_distance: mean over bins of
//       (log10(gen + eps) - log10(ref + eps))^2, eps = 1e-12
//   concentration: ring power within +-1 bin of the dominant reference bin
//       divided by total non-DC power (the dominant bin is the argmax of
//       the reference mean power over bins >= 1)
struct SpectralMetrics {
    double log_spectral_distance = 0.0;
    double concentration_gen = 0.0;
    double concentration_ref = 0.0;
    int dominant_bin = 0;
    RadialProfile gen_profile;
    RadialProfile ref_profile;

    std::string csv() const;           // bin,gen_power,ref_power,count
    std::string summary_line() const;  // log_spectral_distance,concentration_gen,concentration_ref
};

SpectralMetrics evaluate_spectra(const Dataset& generated, const Dataset& reference);

// Mean radial power profile of a whole set (mean over images of per-image
// |X|^2, then binned).
RadialProfile mean_radial_profile(const Dataset& set);

}  // namespace specdiff
