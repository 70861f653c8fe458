#include "specdiff/checkerboard.hpp"

#include "specdiff/error.hpp"
#include "specdiff/rng.hpp"

namespace specdiff {

std::vector<Grid> gen_checkerboard(const CheckerboardConfig& cfg) {
    if (cfg.count < 1) throw ConfigError("gen_checkerboard: count must be >= 1");
    if (cfg.tile < 1) throw ConfigError("gen_checkerboard: tile must be >= 1");
    if (cfg.size < 2 * cfg.tile)
        throw ConfigError("gen_checkerboard: size must be >= 2 * tile (got size " +
                          std::to_string(cfg.size) + ", tile " + std::to_string(cfg.tile) + ")");

    Rng rng(cfg.seed);
    std::vector<Grid> images;
    images.reserve(cfg.count);
    const int period = 2 * cfg.tile;
    for (int n = 0; n < cfg.count; ++n) {
        const int sx = static_cast<int>(rng.uniform_int(period));
        const int sy = static_cast<int>(rng.uniform_int(period));
        Grid img = Grid::zeros(cfg.size, cfg.size);
        for (int y = 0; y < cfg.size; ++y) {
            const int py = (y + sy) / cfg.tile;
            for (int x = 0; x < cfg.size; ++x) {
                const int px = (x + sx) / cfg.tile;
                img.at(y, x) = ((px + py) % 2 == 0) ? cfg.high : cfg.low;
            }
        }
        images.push_back(std::move(img));
    }
    return images;
}

}  // namespace specdiff
