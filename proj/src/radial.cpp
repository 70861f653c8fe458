#include "specdiff/radial.hpp"

#include <cmath>
#include <cstdio>

#include "specdiff/error.hpp"
#include "specdiff/fft.hpp"

namespace specdiff {

double RadialProfile::total_power() const {
    double total = 0.0;
    for (const auto& b : bins) total += b.mean_power * static_cast<double>(b.count);
    return total;
}

std::string RadialProfile::to_csv() const {
    std::string out = "bin,mean_power,count\n";
    char line[96];
    for (const auto& b : bins) {
        std::snprintf(line, sizeof(line), "%d,%.12e,%lld\n", b.radius, b.mean_power,
                      static_cast<long long>(b.count));
        out += line;
    }
    return out;
}

RadialProfile radial_profile_of_power(const Grid& power, std::optional<int> n_bins) {
    if (power.rows <= 1) throw UsageError("radial profile: input must be 2-D");
    const int h = power.rows, w = power.cols;
    const int full = static_cast<int>(std::lround(std::hypot(h / 2.0, w / 2.0)));
    const int last = n_bins ? *n_bins - 1 : full;
    if (last < 0) throw UsageError("radial profile: n_bins must be >= 1");

    std::vector<double> sum(static_cast<std::size_t>(last) + 1, 0.0);
    std::vector<std::int64_t> count(static_cast<std::size_t>(last) + 1, 0);
    for (int i = 0; i < h; ++i) {
        const int u = i <= h / 2 ? i : i - h;
        for (int j = 0; j < w; ++j) {
            const int v = j <= w / 2 ? j : j - w;
            const int r = static_cast<int>(std::lround(std::sqrt(
                static_cast<double>(u) * u + static_cast<double>(v) * v)));
            if (r > last) continue;
            sum[r] += power.at(i, j);
            count[r] += 1;
        }
    }
    RadialProfile profile;
    profile.bins.resize(sum.size());
    for (std::size_t r = 0; r < sum.size(); ++r) {
        profile.bins[r].radius = static_cast<int>(r);
        profile.bins[r].count = count[r];
        profile.bins[r].mean_power = count[r] > 0 ? sum[r] / static_cast<double>(count[r]) : 0.0;
    }
    return profile;
}

RadialProfile radial_power_spectrum(const Grid& x, std::optional<int> n_bins) {
    if (x.rows <= 1)
        throw UsageError("radial_power_spectrum: input must be 2-D (1-D signals report "
                         "per-frequency power directly)");
    const Spectrum s = dft(x);
    Grid power;
    power.rows = s.rows;
    power.cols = s.cols;
    power.data.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        power.data[i] = s.amplitude[i] * s.amplitude[i];
    return radial_profile_of_power(power, n_bins);
}

}  // namespace specdiff
