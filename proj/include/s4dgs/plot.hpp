#pragma once

// Minimal rasterizing plotter for loss curves and qualitative comparison
// strips. Lines, ticks and a baked 5x7 bitmap font; byte-deterministic PNG
// output. Aesthetics are a non-goal.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "s4dgs/io/png.hpp"

namespace s4dgs {

struct CurveSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;  // (iteration, value)
};

namespace plotdetail {

// 5x7 glyphs, bit 4 = leftmost column.
inline const uint8_t* glyph(char c) {
    static const struct {
        char ch;
        uint8_t rows[7];
    } table[] = {
        {'0', {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}},
        {'1', {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e}},
        {'2', {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}},
        {'3', {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e}},
        {'4', {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}},
        {'5', {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e}},
        {'6', {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}},
        {'7', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
        {'8', {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}},
        {'9', {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}},
        {'A', {0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}},
        {'B', {0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e}},
        {'C', {0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e}},
        {'D', {0x1c, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1c}},
        {'E', {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f}},
        {'F', {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10}},
        {'G', {0x0e, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0f}},
        {'H', {0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}},
        {'I', {0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e}},
        {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0c}},
        {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
        {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f}},
        {'M', {0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11}},
        {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
        {'O', {0x0e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}},
        {'P', {0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10}},
        {'Q', {0x0e, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0d}},
        {'R', {0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11}},
        {'S', {0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e}},
        {'T', {0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
        {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}},
        {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0a, 0x04}},
        {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0a}},
        {'X', {0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11}},
        {'Y', {0x11, 0x11, 0x11, 0x0a, 0x04, 0x04, 0x04}},
        {'Z', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1f}},
        {'a', {0x00, 0x00, 0x0e, 0x01, 0x0f, 0x11, 0x0f}},
        {'b', {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x1e}},
        {'c', {0x00, 0x00, 0x0e, 0x10, 0x10, 0x11, 0x0e}},
        {'d', {0x01, 0x01, 0x0d, 0x13, 0x11, 0x11, 0x0f}},
        {'e', {0x00, 0x00, 0x0e, 0x11, 0x1f, 0x10, 0x0e}},
        {'f', {0x06, 0x09, 0x08, 0x1c, 0x08, 0x08, 0x08}},
        {'g', {0x00, 0x0f, 0x11, 0x11, 0x0f, 0x01, 0x0e}},
        {'h', {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11}},
        {'i', {0x04, 0x00, 0x0c, 0x04, 0x04, 0x04, 0x0e}},
        {'j', {0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0c}},
        {'k', {0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12}},
        {'l', {0x0c, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e}},
        {'m', {0x00, 0x00, 0x1a, 0x15, 0x15, 0x15, 0x15}},
        {'n', {0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11}},
        {'o', {0x00, 0x00, 0x0e, 0x11, 0x11, 0x11, 0x0e}},
        {'p', {0x00, 0x00, 0x1e, 0x11, 0x1e, 0x10, 0x10}},
        {'q', {0x00, 0x00, 0x0d, 0x13, 0x0f, 0x01, 0x01}},
        {'r', {0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10}},
        {'s', {0x00, 0x00, 0x0e, 0x10, 0x0e, 0x01, 0x1e}},
        {'t', {0x08, 0x08, 0x1c, 0x08, 0x08, 0x09, 0x06}},
        {'u', {0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0d}},
        {'v', {0x00, 0x00, 0x11, 0x11, 0x11, 0x0a, 0x04}},
        {'w', {0x00, 0x00, 0x11, 0x15, 0x15, 0x15, 0x0a}},
        {'x', {0x00, 0x00, 0x11, 0x0a, 0x04, 0x0a, 0x11}},
        {'y', {0x00, 0x00, 0x11, 0x11, 0x0f, 0x01, 0x0e}},
        {'z', {0x00, 0x00, 0x1f, 0x02, 0x04, 0x08, 0x1f}},
        {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c}},
        {',', {0x00, 0x00, 0x00, 0x00, 0x0c, 0x04, 0x08}},
        {'-', {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00}},
        {'+', {0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00}},
        {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1f}},
        {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}},
        {':', {0x00, 0x0c, 0x0c, 0x00, 0x0c, 0x0c, 0x00}},
        {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
        {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
        {'=', {0x00, 0x00, 0x1f, 0x00, 0x1f, 0x00, 0x00}},
        {'%', {0x19, 0x1a, 0x02, 0x04, 0x08, 0x0b, 0x13}},
        {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    };
    for (const auto& e : table)
        if (e.ch == c) return e.rows;
    static const uint8_t box[7] = {0x1f, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1f};
    return box;
}

struct Rgb {
    uint8_t r, g, b;
};

inline const Rgb kPalette[6] = {{204, 37, 41},  {57, 106, 177}, {62, 150, 81},
                                {218, 124, 48}, {107, 76, 154}, {20, 150, 160}};

class Canvas {
public:
    Canvas(int w, int h) : width_(w), height_(h), pix_(size_t(w) * h * 3, 255) {}

    void set(int x, int y, Rgb c) {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
        size_t i = (size_t(y) * width_ + x) * 3;
        pix_[i] = c.r;
        pix_[i + 1] = c.g;
        pix_[i + 2] = c.b;
    }

    void line(int x0, int y0, int x1, int y1, Rgb c) {
        int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
        int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        while (true) {
            set(x0, y0, c);
            if (x0 == x1 && y0 == y1) break;
            int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }

    void text(int x, int y, const std::string& s, Rgb c) {
        for (char ch : s) {
            const uint8_t* rows = glyph(ch);
            for (int r = 0; r < 7; ++r)
                for (int col = 0; col < 5; ++col)
                    if (rows[r] & (1 << (4 - col))) set(x + col, y + r, c);
            x += 6;
        }
    }

    void save(const std::string& path) const {
        io::write_file(path, io::encode_png_rgb8(pix_, width_, height_));
    }

    int width() const { return width_; }
    int height() const { return height_; }

private:
    int width_, height_;
    std::vector<uint8_t> pix_;
};

inline std::string format_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("plot: cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) throw std::runtime_error("plot: empty CSV " + path);
    return rows;
}

}  // namespace plotdetail

/// One series per (csv file, column); x is the `iter` column.
inline std::vector<CurveSeries> load_series(const std::vector<std::string>& csv_paths,
                                            const std::vector<std::string>& columns) {
    std::vector<CurveSeries> series;
    for (const auto& path : csv_paths) {
        auto rows = plotdetail::read_csv(path);
        const auto& header = rows[0];
        auto col_index = [&](const std::string& name) {
            for (size_t i = 0; i < header.size(); ++i)
                if (header[i] == name) return i;
            throw std::runtime_error("plot: column '" + name + "' not found in " + path);
        };
        size_t xcol = col_index("iter");
        for (const auto& col : columns) {
            size_t ycol = col_index(col);
            CurveSeries s;
            s.label = std::filesystem::path(path).stem().string() + ":" + col;
            for (size_t r = 1; r < rows.size(); ++r) {
                if (ycol >= rows[r].size() || rows[r][ycol].empty()) continue;
                s.points.push_back({std::stod(rows[r][xcol]), std::stod(rows[r][ycol])});
            }
            for (size_t i = 1; i < s.points.size(); ++i)
                if (s.points[i].first <= s.points[i - 1].first)
                    throw std::runtime_error("plot: iterations not strictly increasing in " + path);
            series.push_back(std::move(s));
        }
    }
    return series;
}

inline void plot_curves(const std::vector<std::string>& csv_paths,
                        const std::vector<std::string>& columns, const std::string& out_path,
                        int width = 640, int height = 400) {
    auto series = load_series(csv_paths, columns);
    if (series.empty()) throw std::runtime_error("plot: nothing to plot");

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmin > xmax) throw std::runtime_error("plot: all series are empty");
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    plotdetail::Canvas canvas(width, height);
    const int ml = 56, mr = 12, mt = 14, mb = 26;
    int x0 = ml, x1 = width - mr, y0 = height - mb, y1 = mt;
    plotdetail::Rgb black{0, 0, 0}, gray{208, 208, 208};

    auto to_px = [&](double x, double y) {
        int px = x0 + int(std::lround((x - xmin) / (xmax - xmin) * (x1 - x0)));
        int py = y0 - int(std::lround((y - ymin) / (ymax - ymin) * (y0 - y1)));
        return std::pair<int, int>{px, py};
    };

    for (int k = 0; k <= 5; ++k) {  // ticks and grid
        double xv = xmin + (xmax - xmin) * k / 5.0;
        double yv = ymin + (ymax - ymin) * k / 5.0;
        auto [px, _] = to_px(xv, ymin);
        auto [__, py] = to_px(xmin, yv);
        canvas.line(px, y1, px, y0, gray);
        canvas.line(x0, py, x1, py, gray);
        canvas.line(px, y0, px, y0 + 3, black);
        canvas.line(x0 - 3, py, x0, py, black);
        std::string xs = plotdetail::format_tick(xv);
        canvas.text(px - int(xs.size()) * 3, y0 + 6, xs, black);
        std::string ys = plotdetail::format_tick(yv);
        canvas.text(x0 - 6 - int(ys.size()) * 6, py - 3, ys, black);
    }
    canvas.line(x0, y0, x1, y0, black);
    canvas.line(x0, y0, x0, y1, black);
    canvas.text((x0 + x1) / 2 - 12, height - 9, "iter", black);

    for (size_t si = 0; si < series.size(); ++si) {
        plotdetail::Rgb c = plotdetail::kPalette[si % 6];
        const auto& pts = series[si].points;
        for (size_t i = 1; i < pts.size(); ++i) {
            auto [ax, ay] = to_px(pts[i - 1].first, pts[i - 1].second);
            auto [bx, by] = to_px(pts[i].first, pts[i].second);
            canvas.line(ax, ay, bx, by, c);
        }
        int ly = y1 + 4 + int(si) * 10;
        canvas.line(x0 + 6, ly + 3, x0 + 22, ly + 3, c);
        canvas.text(x0 + 26, ly, series[si].label, black);
    }
    canvas.save(out_path);
}

/// Horizontal strip of images with caption labels (qualitative panels).
inline void side_by_side(const std::vector<std::string>& image_paths, const std::string& out_path,
                         int target_height = 0, int pad = 4) {
    if (image_paths.empty()) throw std::runtime_error("side_by_side: no input images");
    struct Panel {
        std::vector<uint8_t> pix;
        int w, h;
        std::string label;
    };
    std::vector<Panel> panels;
    int min_h = 1 << 30;
    for (const auto& p : image_paths) {
        Panel panel;
        panel.pix = io::decode_png_rgb8(io::read_file(p), panel.w, panel.h);
        panel.label = std::filesystem::path(p).stem().string();
        min_h = std::min(min_h, panel.h);
        panels.push_back(std::move(panel));
    }
    int th = target_height > 0 ? target_height : min_h;

    // nearest-neighbor resize to the common height
    int total_w = pad;
    for (auto& p : panels) {
        int nw = std::max(1, int(std::lround(double(p.w) * th / p.h)));
        std::vector<uint8_t> out(size_t(nw) * th * 3);
        for (int y = 0; y < th; ++y) {
            int sy = std::min(p.h - 1, int(size_t(y) * p.h / th));
            for (int x = 0; x < nw; ++x) {
                int sx = std::min(p.w - 1, int(size_t(x) * p.w / nw));
                for (int c = 0; c < 3; ++c)
                    out[(size_t(y) * nw + x) * 3 + c] = p.pix[(size_t(sy) * p.w + sx) * 3 + c];
            }
        }
        p.pix = std::move(out);
        p.w = nw;
        p.h = th;
        total_w += nw + pad;
    }

    const int caption_h = 12;
    plotdetail::Canvas canvas(total_w, th + 2 * pad + caption_h);
    int xoff = pad;
    for (const auto& p : panels) {
        for (int y = 0; y < p.h; ++y)
            for (int x = 0; x < p.w; ++x)
                canvas.set(xoff + x, pad + y,
                           {p.pix[(size_t(y) * p.w + x) * 3], p.pix[(size_t(y) * p.w + x) * 3 + 1],
                            p.pix[(size_t(y) * p.w + x) * 3 + 2]});
        canvas.text(xoff + 2, pad + th + 3, p.label, {0, 0, 0});
        xoff += p.w + pad;
    }
    canvas.save(out_path);
}

}  // namespace s4dgs
