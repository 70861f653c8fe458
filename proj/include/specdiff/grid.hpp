#pragma once

#include <vector>

namespace specdiff {

// Real-valued 1-D (rows == 1) or 2-D signal, row-major.
struct Grid {
    int rows = 1;
    int cols = 0;
    std::vector<double> data;

    static Grid vec(std::vector<double> v) {
        Grid g;
        g.rows = 1;
        g.cols = static_cast<int>(v.size());
        g.data = std::move(v);
        return g;
    }

    static Grid image(int rows, int cols, std::vector<double> v) {
        Grid g;
        g.rows = rows;
        g.cols = cols;
        g.data = std::move(v);
        return g;
    }

    static Grid zeros(int rows, int cols) {
        return image(rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0));
    }

    bool is_1d() const { return rows == 1; }
    std::size_t size() const { return data.size(); }
    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

}  // namespace specdiff
