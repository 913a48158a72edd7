#pragma once

// Minimal 8-bit RGB PNG writer/reader. The writer emits uncompressed
// (stored) deflate blocks and filter-0 scanlines, which keeps output
// byte-deterministic and the reader trivial; the reader accepts exactly that
// subset. Round trips of our own files are bit-exact.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "s4dgs/image.hpp"

namespace s4dgs::io {

namespace detail {

inline const std::array<uint32_t, 256>& crc_table() {
    static const std::array<uint32_t, 256> table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    return table;
}

inline uint32_t crc32(const uint8_t* data, size_t len, uint32_t crc = 0xffffffffu) {
    const auto& t = crc_table();
    for (size_t i = 0; i < len; ++i) crc = t[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
    return crc;
}

inline uint32_t adler32(const uint8_t* data, size_t len) {
    uint32_t a = 1, b = 0;
    for (size_t i = 0; i < len; ++i) {
        a = (a + data[i]) % 65521u;
        b = (b + a) % 65521u;
    }
    return (b << 16) | a;
}

inline void put_be32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

inline void put_chunk(std::vector<uint8_t>& out, const char type[4],
                      const std::vector<uint8_t>& data) {
    put_be32(out, uint32_t(data.size()));
    size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    uint32_t crc = crc32(out.data() + start, out.size() - start) ^ 0xffffffffu;
    put_be32(out, crc);
}

inline constexpr uint8_t kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

}  // namespace detail

/// Encodes an 8-bit RGB buffer (row-major, 3 channels) to PNG bytes.
inline std::vector<uint8_t> encode_png_rgb8(const std::vector<uint8_t>& pixels, int width,
                                            int height) {
    if (pixels.size() != size_t(width) * height * 3)
        throw std::invalid_argument("encode_png_rgb8: pixel buffer does not match dimensions");
    std::vector<uint8_t> out(detail::kPngSignature, detail::kPngSignature + 8);

    std::vector<uint8_t> ihdr;
    detail::put_be32(ihdr, uint32_t(width));
    detail::put_be32(ihdr, uint32_t(height));
    ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit, RGB, deflate, none, no interlace
    detail::put_chunk(out, "IHDR", ihdr);

    // Scanlines with filter byte 0.
    std::vector<uint8_t> raw;
    raw.reserve(size_t(height) * (size_t(width) * 3 + 1));
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);
        const uint8_t* row = pixels.data() + size_t(y) * width * 3;
        raw.insert(raw.end(), row, row + size_t(width) * 3);
    }

    // zlib stream of stored deflate blocks.
    std::vector<uint8_t> idat;
    idat.push_back(0x78);
    idat.push_back(0x01);
    size_t pos = 0;
    while (pos < raw.size() || raw.empty()) {
        size_t len = std::min<size_t>(65535, raw.size() - pos);
        bool final = pos + len == raw.size();
        idat.push_back(final ? 1 : 0);
        idat.push_back(uint8_t(len & 0xff));
        idat.push_back(uint8_t(len >> 8));
        idat.push_back(uint8_t(~len & 0xff));
        idat.push_back(uint8_t((~len >> 8) & 0xff));
        idat.insert(idat.end(), raw.begin() + pos, raw.begin() + pos + len);
        pos += len;
        if (final) break;
    }
    detail::put_be32(idat, detail::adler32(raw.data(), raw.size()));
    detail::put_chunk(out, "IDAT", idat);
    detail::put_chunk(out, "IEND", {});
    return out;
}

/// Decodes the subset produced by encode_png_rgb8.
inline std::vector<uint8_t> decode_png_rgb8(const std::vector<uint8_t>& bytes, int& width,
                                            int& height) {
    auto fail = [](const std::string& why) -> std::vector<uint8_t> {
        throw std::runtime_error("decode_png: " + why);
    };
    if (bytes.size() < 8 || std::memcmp(bytes.data(), detail::kPngSignature, 8) != 0)
        return fail("bad signature");
    auto be32 = [&](size_t at) {
        return (uint32_t(bytes[at]) << 24) | (uint32_t(bytes[at + 1]) << 16) |
               (uint32_t(bytes[at + 2]) << 8) | uint32_t(bytes[at + 3]);
    };
    size_t pos = 8;
    width = height = 0;
    std::vector<uint8_t> idat;
    bool saw_end = false;
    while (pos + 12 <= bytes.size() && !saw_end) {
        uint32_t len = be32(pos);
        if (pos + 12 + len > bytes.size()) return fail("truncated chunk");
        std::string type(bytes.begin() + pos + 4, bytes.begin() + pos + 8);
        const uint8_t* data = bytes.data() + pos + 8;
        if (type == "IHDR") {
            if (len != 13) return fail("bad IHDR length");
            width = int(be32(pos + 8));
            height = int(be32(pos + 12));
            if (data[8] != 8 || data[9] != 2 || data[12] != 0)
                return fail("unsupported format (need 8-bit RGB, no interlace)");
        } else if (type == "IDAT") {
            idat.insert(idat.end(), data, data + len);
        } else if (type == "IEND") {
            saw_end = true;
        }
        pos += 12 + len;
    }
    if (width <= 0 || height <= 0) return fail("missing IHDR");
    if (idat.size() < 2) return fail("missing IDAT");

    // Inflate: stored blocks only.
    std::vector<uint8_t> raw;
    size_t ip = 2;  // skip zlib header
    while (true) {
        if (ip >= idat.size()) return fail("truncated deflate stream");
        uint8_t header = idat[ip++];
        if ((header & 0x06) != 0) return fail("unsupported deflate block (writer uses stored)");
        if (ip + 4 > idat.size()) return fail("truncated deflate stream");
        uint32_t len = uint32_t(idat[ip]) | (uint32_t(idat[ip + 1]) << 8);
        ip += 4;  // LEN + NLEN
        if (ip + len > idat.size()) return fail("truncated deflate stream");
        raw.insert(raw.end(), idat.begin() + ip, idat.begin() + ip + len);
        ip += len;
        if (header & 1) break;
    }

    size_t stride = size_t(width) * 3 + 1;
    if (raw.size() != stride * size_t(height)) return fail("scanline size mismatch");
    std::vector<uint8_t> pixels(size_t(width) * height * 3);
    for (int y = 0; y < height; ++y) {
        if (raw[size_t(y) * stride] != 0) return fail("unsupported scanline filter");
        std::memcpy(pixels.data() + size_t(y) * width * 3, raw.data() + size_t(y) * stride + 1,
                    size_t(width) * 3);
    }
    return pixels;
}

inline void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + path);
}

inline std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
}

/// Quantizes a [0,1] float image to 8-bit and writes it as PNG.
template <typename T>
void save_png(const Image<T>& rgb, const std::string& path) {
    if (rgb.channels != 3) throw std::invalid_argument("save_png: expected 3 channels");
    std::vector<uint8_t> pix(rgb.data.size());
    for (size_t i = 0; i < rgb.data.size(); ++i) {
        T v = std::clamp(rgb.data[i], T(0), T(1));
        pix[i] = uint8_t(std::lround(double(v) * 255.0));
    }
    write_file(path, encode_png_rgb8(pix, rgb.width, rgb.height));
}

template <typename T>
Image<T> load_png(const std::string& path) {
    int w = 0, h = 0;
    std::vector<uint8_t> pix = decode_png_rgb8(read_file(path), w, h);
    Image<T> img(h, w, 3);
    for (size_t i = 0; i < pix.size(); ++i) img.data[i] = T(pix[i]) / T(255);
    return img;
}

}  // namespace s4dgs::io
