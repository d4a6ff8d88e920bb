#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "tempotrack/ops.hpp"
#include "tempotrack/tensor.hpp"

namespace tempotrack {

// Frames are 3 x H x W float tensors holding 8-bit values (0..255).

namespace detail {

inline int read_ppm_int(std::istream& in) {
    // whitespace and '#'-comment tolerant header scan
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (!std::isspace(ch)) {
            break;
        }
        ch = in.get();
    }
    if (ch == EOF || !std::isdigit(ch)) throw InputError("ppm: malformed header");
    int value = 0;
    while (ch != EOF && std::isdigit(ch)) {
        value = value * 10 + (ch - '0');
        ch = in.get();
    }
    return value;
}

}  // namespace detail

inline Tensor read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("ppm: cannot open " + path);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '6') throw InputError("ppm: not a P6 file: " + path);
    const int w = detail::read_ppm_int(in);
    const int h = detail::read_ppm_int(in);
    const int maxval = detail::read_ppm_int(in);
    if (w < 1 || h < 1 || maxval != 255) throw InputError("ppm: unsupported header in " + path);

    std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw InputError("ppm: truncated pixel data in " + path);
    }

    Tensor img({3, h, w});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t p = (static_cast<std::size_t>(y) * w + x) * 3;
            img.at(0, y, x) = static_cast<float>(raw[p]);
            img.at(1, y, x) = static_cast<float>(raw[p + 1]);
            img.at(2, y, x) = static_cast<float>(raw[p + 2]);
        }
    }
    return img;
}

inline void write_ppm(const Tensor& img, const std::string& path) {
    if (img.rank() != 3 || img.dim(0) != 3) throw InputError("ppm: image must be 3 x H x W");
    const int h = img.dim(1), w = img.dim(2);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("ppm: cannot write " + path);
    out << "P6\n" << w << " " << h << "\n255\n";
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t p = (static_cast<std::size_t>(y) * w + x) * 3;
            for (int c = 0; c < 3; ++c) {
                const float v = std::round(img.at(c, y, x));
                raw[p + c] = static_cast<std::uint8_t>(std::clamp(v, 0.0f, 255.0f));
            }
        }
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw InputError("ppm: short write to " + path);
}

inline std::array<float, 3> channel_means(const Tensor& frame) {
    const Tensor m = global_avg_pool(frame);
    return {m.at(0), m.at(1), m.at(2)};
}

}  // namespace tempotrack
