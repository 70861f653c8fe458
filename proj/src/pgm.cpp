#include "specdiff/pgm.hpp"

#include <cmath>
#include <fstream>

#include "specdiff/error.hpp"

namespace specdiff {

void write_pgm(const Grid& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_pgm: cannot open '" + path + "' for writing");
    out << "P5\n" << img.cols << " " << img.rows << "\n255\n";
    std::string bytes;
    bytes.reserve(img.size());
    for (double v : img.data) {
        const double unit = std::min(1.0, std::max(0.0, (v + 1.0) / 2.0));
        bytes.push_back(static_cast<char>(
            static_cast<unsigned char>(std::floor(unit * 255.0 + 0.5))));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write_pgm: short write to '" + path + "'");
}

namespace {

// Reads one whitespace/comment-delimited header token.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

}  // namespace

Grid read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_pgm: cannot open '" + path + "'");
    if (next_token(in) != "P5") throw IoError("read_pgm: '" + path + "' is not a binary PGM");
    int cols = 0, rows = 0, maxval = 0;
    try {
        cols = std::stoi(next_token(in));
        rows = std::stoi(next_token(in));
        maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        throw IoError("read_pgm: malformed header in '" + path + "'");
    }
    if (cols <= 0 || rows <= 0 || maxval <= 0 || maxval > 255)
        throw IoError("read_pgm: unsupported geometry or maxval in '" + path + "'");

    std::string bytes(static_cast<std::size_t>(rows) * cols, '\0');
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw IoError("read_pgm: truncated pixel data in '" + path + "'");

    Grid img = Grid::zeros(rows, cols);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const double unit = static_cast<unsigned char>(bytes[i]) / static_cast<double>(maxval);
        img.data[i] = unit * 2.0 - 1.0;
    }
    return img;
}

}  // namespace specdiff
