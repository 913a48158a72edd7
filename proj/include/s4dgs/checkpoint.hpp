#pragma once

// Checkpoint container, version 1.
//
//   bytes 0..7   magic "S4DGS\0v1"
//   uint64 LE    gaussian count N
//   float32 LE   position (3N), raw_scale (3N), rotation (4N, wxyz),
//                raw_opacity (N), color (3N), raw_ti (N)
//   uint64 LE    byte length of the deformation block
//   uint32 LE x4 hidden_layers, width, pos_freqs, time_freqs
//   float32 LE   per layer: weights then bias, hidden layers first,
//                then the dx / dr / ds heads
//
// All fields round-trip bit-exactly for float clouds.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "s4dgs/cloud.hpp"
#include "s4dgs/deformation.hpp"

namespace s4dgs {

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'S', '4', 'D', 'G', 'S', '\0', 'v', '1'};

inline void put_u64(std::string& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_f32(std::string& buf, float v) {
    char raw[4];
    std::memcpy(raw, &v, 4);
    buf.append(raw, 4);  // this build is little-endian; asserted below
}

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

class Reader {
public:
    Reader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() {
        need(4);
        float v;
        std::memcpy(&v, bytes_.data() + pos_, 4);
        pos_ += 4;
        return v;
    }
    void need(size_t n) const {
        if (pos_ + n > bytes_.size())
            throw std::runtime_error("checkpoint: truncated payload in " + path_);
    }
    size_t pos() const { return pos_; }

private:
    const std::string& bytes_;
    std::string path_;
    size_t pos_ = 0;
};

}  // namespace detail

template <typename T>
void save_checkpoint(const GaussianCloud<T>& cloud, const DeformationParams<T>& params,
                     const std::string& path) {
    cloud.check_consistent();
    std::string buf;
    buf.reserve(64 + cloud.size() * 15 * 4 + params.parameter_count() * 4);
    buf.append(detail::kCheckpointMagic, 8);
    detail::put_u64(buf, cloud.size());
    for (const auto& p : cloud.position)
        for (int c = 0; c < 3; ++c) detail::put_f32(buf, float(p[c]));
    for (const auto& s : cloud.raw_scale)
        for (int c = 0; c < 3; ++c) detail::put_f32(buf, float(s[c]));
    for (const auto& r : cloud.rotation)
        for (int c = 0; c < 4; ++c) detail::put_f32(buf, float(r[c]));
    for (T o : cloud.raw_opacity) detail::put_f32(buf, float(o));
    for (const auto& c : cloud.color)
        for (int k = 0; k < 3; ++k) detail::put_f32(buf, float(c[k]));
    for (T t : cloud.raw_ti) detail::put_f32(buf, float(t));

    std::string block;
    detail::put_u32(block, uint32_t(params.cfg.hidden_layers));
    detail::put_u32(block, uint32_t(params.cfg.width));
    detail::put_u32(block, uint32_t(params.cfg.pos_freqs));
    detail::put_u32(block, uint32_t(params.cfg.time_freqs));
    params.for_each_tensor([&](const std::vector<T>& t) {
        for (T v : t) detail::put_f32(block, float(v));
    });
    detail::put_u64(buf, block.size());
    buf += block;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    out.write(buf.data(), std::streamsize(buf.size()));
    if (!out) throw std::runtime_error("checkpoint: short write to " + path);
}

template <typename T>
std::pair<GaussianCloud<T>, DeformationParams<T>> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() < 8 || std::memcmp(bytes.data(), detail::kCheckpointMagic, 6) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    if (std::memcmp(bytes.data() + 6, detail::kCheckpointMagic + 6, 2) != 0)
        throw std::runtime_error("checkpoint: unsupported version in " + path +
                                 " (expected v1, got '" + bytes.substr(6, 2) + "')");

    detail::Reader r(bytes, path);
    r.u64();  // magic, already validated
    uint64_t n = r.u64();

    GaussianCloud<T> cloud;
    cloud.resize(n);
    for (auto& p : cloud.position)
        for (int c = 0; c < 3; ++c) p[c] = T(r.f32());
    for (auto& s : cloud.raw_scale)
        for (int c = 0; c < 3; ++c) s[c] = T(r.f32());
    for (auto& q : cloud.rotation)
        for (int c = 0; c < 4; ++c) q[c] = T(r.f32());
    for (auto& o : cloud.raw_opacity) o = T(r.f32());
    for (auto& c : cloud.color)
        for (int k = 0; k < 3; ++k) c[k] = T(r.f32());
    for (auto& t : cloud.raw_ti) t = T(r.f32());

    uint64_t block_len = r.u64();
    size_t block_start = r.pos();
    r.need(block_len);

    DeformationConfig cfg;
    cfg.hidden_layers = int(r.u32());
    cfg.width = int(r.u32());
    cfg.pos_freqs = int(r.u32());
    cfg.time_freqs = int(r.u32());
    if (cfg.hidden_layers < 0 || cfg.hidden_layers > 64 || cfg.width < 0 || cfg.width > 16384 ||
        cfg.pos_freqs < 1 || cfg.pos_freqs > 64 || cfg.time_freqs < 1 || cfg.time_freqs > 64)
        throw std::runtime_error("checkpoint: implausible deformation configuration in " + path);

    DeformationParams<T> params;
    params.cfg = cfg;
    params.hidden.resize(cfg.hidden_layers);
    int fan_in = cfg.input_dim();
    for (int l = 0; l < cfg.hidden_layers; ++l) {
        params.hidden[l].resize(fan_in, cfg.width);
        fan_in = cfg.width;
    }
    params.head_dx.resize(cfg.width, 3);
    params.head_dr.resize(cfg.width, 4);
    params.head_ds.resize(cfg.width, 3);
    params.for_each_tensor([&](std::vector<T>& t) {
        for (auto& v : t) v = T(r.f32());
    });

    if (r.pos() - block_start != block_len)
        throw std::runtime_error("checkpoint: deformation block length mismatch in " + path);
    return {std::move(cloud), std::move(params)};
}

}  // namespace s4dgs
