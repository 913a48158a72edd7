#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "s4dgs/core.hpp"

namespace s4dgs {

// Dense row-major H x W x C buffer.
template <typename T>
struct Image {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<T> data;

    Image() = default;
    Image(int h, int w, int c, T fill = T(0))
        : height(h), width(w), channels(c), data(size_t(h) * w * c, fill) {}

    T& at(int i, int j, int c = 0) { return data[(size_t(i) * width + j) * channels + c]; }
    const T& at(int i, int j, int c = 0) const {
        return data[(size_t(i) * width + j) * channels + c];
    }

    size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    template <typename U>
    Image<U> cast() const {
        Image<U> out(height, width, channels);
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = U(data[i]);
        return out;
    }
};

template <typename T>
void require_same_shape(const Image<T>& a, const Image<T>& b, const char* where) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(where) + ": shape mismatch (" +
                                    std::to_string(a.height) + "x" + std::to_string(a.width) +
                                    "x" + std::to_string(a.channels) + " vs " +
                                    std::to_string(b.height) + "x" + std::to_string(b.width) +
                                    "x" + std::to_string(b.channels) + ")");
}

}  // namespace s4dgs
