#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "s4dgs/io/png.hpp"
#include "s4dgs/plot.hpp"
#include "testutil.hpp"

using namespace s4dgs;
namespace fs = std::filesystem;

namespace {

std::string write_csv(const std::string& dir, const std::string& name, const std::string& body) {
    std::string path = dir + "/" + name;
    std::ofstream(path) << body;
    return path;
}

const char* kSmallCsv =
    "iter,l1,ssim,tex,tadr,total,psnr_probe\n"
    "0,0.5,0.4,1.0,1.0,0.54,\n"
    "1,0.45,0.38,0.9,0.95,0.49,21.5\n"
    "2,0.40,0.33,0.85,0.9,0.44,\n"
    "3,0.33,0.30,0.8,0.82,0.38,23.0\n";

}  // namespace

TEST(PlotCurves, SingleSeriesProducesDecodablePng) {
    auto dir = testutil::temp_dir("plot1");
    auto csv = write_csv(dir, "m.csv", kSmallCsv);
    std::string out = dir + "/total.png";
    plot_curves({csv}, {"total"}, out);
    ASSERT_TRUE(fs::exists(out));
    int w = 0, h = 0;
    auto pix = io::decode_png_rgb8(io::read_file(out), w, h);
    EXPECT_EQ(w, 640);
    EXPECT_EQ(h, 400);
    // something was drawn: not all pixels are the white background
    bool any_ink = false;
    for (uint8_t v : pix)
        if (v != 255) any_ink = true;
    EXPECT_TRUE(any_ink);
}

TEST(PlotCurves, SkipsEmptyCellsAndMultipleSeries) {
    auto dir = testutil::temp_dir("plot2");
    auto a = write_csv(dir, "a.csv", kSmallCsv);
    auto b = write_csv(dir, "b.csv", kSmallCsv);
    auto c = write_csv(dir, "c.csv", kSmallCsv);
    std::string out = dir + "/psnr.png";
    plot_curves({a, b, c}, {"psnr_probe"}, out);  // only rows 1 and 3 have values
    EXPECT_TRUE(fs::exists(out));
    auto series = load_series({a}, {"psnr_probe"});
    ASSERT_EQ(series.size(), 1u);
    ASSERT_EQ(series[0].points.size(), 2u);
    EXPECT_DOUBLE_EQ(series[0].points[1].second, 23.0);
}

TEST(PlotCurves, MissingColumnNamesFile) {
    auto dir = testutil::temp_dir("plot3");
    auto csv = write_csv(dir, "m.csv", kSmallCsv);
    try {
        plot_curves({csv}, {"nope"}, dir + "/x.png");
        FAIL();
    } catch (const std::runtime_error& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("nope"), std::string::npos);
        EXPECT_NE(msg.find("m.csv"), std::string::npos);
    }
}

TEST(PlotCurves, DeterministicBytes) {
    auto dir = testutil::temp_dir("plot4");
    auto csv = write_csv(dir, "m.csv", kSmallCsv);
    plot_curves({csv}, {"total", "l1"}, dir + "/a.png");
    plot_curves({csv}, {"total", "l1"}, dir + "/b.png");
    EXPECT_EQ(io::read_file(dir + "/a.png"), io::read_file(dir + "/b.png"));
}

TEST(SideBySide, WidthsAndCaptions) {
    auto dir = testutil::temp_dir("strip");
    Image<float> img(64, 64, 3, 0.5f);
    io::save_png(img, dir + "/left.png");
    io::save_png(img, dir + "/right.png");
    std::string out = dir + "/strip.png";
    side_by_side({dir + "/left.png", dir + "/right.png"}, out, 0, 4);
    int w = 0, h = 0;
    io::decode_png_rgb8(io::read_file(out), w, h);
    EXPECT_EQ(w, 64 * 2 + 3 * 4);  // two panels plus padding
    EXPECT_EQ(h, 64 + 2 * 4 + 12);  // image + padding + caption strip
}

TEST(SideBySide, SinglePassthroughAndResize) {
    auto dir = testutil::temp_dir("strip2");
    Image<float> small(32, 48, 3, 0.2f);
    io::save_png(small, dir + "/one.png");
    side_by_side({dir + "/one.png"}, dir + "/out.png");
    EXPECT_TRUE(fs::exists(dir + "/out.png"));

    Image<float> tall(64, 20, 3, 0.8f);
    io::save_png(tall, dir + "/tall.png");
    side_by_side({dir + "/one.png", dir + "/tall.png"}, dir + "/mixed.png", 32);
    int w = 0, h = 0;
    io::decode_png_rgb8(io::read_file(dir + "/mixed.png"), w, h);
    EXPECT_EQ(h, 32 + 2 * 4 + 12);  // resized to the requested height
}

TEST(SideBySide, ZeroInputsThrow) {
    EXPECT_THROW(side_by_side({}, "/tmp/never.png"), std::runtime_error);
}
