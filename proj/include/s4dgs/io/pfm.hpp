#pragma once

// Grayscale PFM ("Pf"), little-endian (scale -1.0), rows bottom to top per
// the format convention. Used for depth and TI maps; float32 payloads round
// trip bit-exactly.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "s4dgs/image.hpp"

namespace s4dgs::io {

template <typename T>
void save_pfm(const Image<T>& img, const std::string& path) {
    if (img.channels != 1) throw std::invalid_argument("save_pfm: expected 1 channel");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "Pf\n" << img.width << " " << img.height << "\n-1.0\n";
    static_assert(std::endian::native == std::endian::little);
    for (int i = img.height - 1; i >= 0; --i) {
        for (int j = 0; j < img.width; ++j) {
            float v = float(img.at(i, j));
            out.write(reinterpret_cast<const char*>(&v), 4);
        }
    }
    if (!out) throw std::runtime_error("short write to " + path);
}

template <typename T>
Image<T> load_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic == "PF") throw std::runtime_error("load_pfm: color PFM not supported in " + path);
    if (magic != "Pf") throw std::runtime_error("load_pfm: bad magic in " + path);
    int w = 0, h = 0;
    double scale = 0;
    in >> w >> h >> scale;
    if (!in || w <= 0 || h <= 0) throw std::runtime_error("load_pfm: malformed header in " + path);
    if (scale >= 0) throw std::runtime_error("load_pfm: big-endian PFM not supported in " + path);
    in.get();  // single whitespace after the scale
    Image<T> img(h, w, 1);
    for (int i = h - 1; i >= 0; --i) {
        for (int j = 0; j < w; ++j) {
            float v;
            in.read(reinterpret_cast<char*>(&v), 4);
            if (!in) throw std::runtime_error("load_pfm: truncated payload in " + path);
            img.at(i, j) = T(v);
        }
    }
    return img;
}

}  // namespace s4dgs::io
