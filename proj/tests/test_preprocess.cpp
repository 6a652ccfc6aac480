#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include "amdnet/enhance.hpp"
#include "amdnet/errors.hpp"
#include "amdnet/image.hpp"
#include "support/fixtures.hpp"

using namespace amdnet;

namespace {

ImageU8 solid_rgb(std::uint8_t r, std::uint8_t g, std::uint8_t b, int w = 4, int h = 4) {
    ImageU8 img = ImageU8::make(w, h, 3, ColorSpace::Rgb);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        img.data[p * 3] = r;
        img.data[p * 3 + 1] = g;
        img.data[p * 3 + 2] = b;
    }
    return img;
}

// Reference inverse of the CIELAB conversion, for the round-trip bound.
void lab_to_rgb_ref(double l8, double a8, double b8, double& r, double& g, double& b) {
    const double l = l8 * 100.0 / 255.0;
    const double a = a8 - 128.0;
    const double bb = b8 - 128.0;
    const double fy = (l + 16.0) / 116.0;
    const double fx = fy + a / 500.0;
    const double fz = fy - bb / 200.0;
    auto finv = [](double t) {
        const double t3 = t * t * t;
        return t3 > 216.0 / 24389.0 ? t3 : (116.0 * t - 16.0) * 27.0 / 24389.0;
    };
    const double x = finv(fx) * 0.95047;
    const double y = finv(fy);
    const double z = finv(fz) * 1.08883;
    const double rl = x * 3.2404542 + y * -1.5371385 + z * -0.4985314;
    const double gl = x * -0.9692660 + y * 1.8760108 + z * 0.0415560;
    const double bl = x * 0.0556434 + y * -0.2040259 + z * 1.0572252;
    auto delin = [](double u) {
        u = std::clamp(u, 0.0, 1.0);
        return 255.0 * (u > 0.0031308 ? 1.055 * std::pow(u, 1.0 / 2.4) - 0.055 : 12.92 * u);
    };
    r = delin(rl);
    g = delin(gl);
    b = delin(bl);
}

// Brute-force global histogram equalization, the CLAHE grid-(1,1) oracle.
ImageU8 global_equalize_ref(const ImageU8& gray) {
    std::array<std::uint64_t, 256> hist{};
    for (auto v : gray.data) ++hist[v];
    std::array<std::uint8_t, 256> map{};
    std::uint64_t cdf = 0;
    for (int v = 0; v < 256; ++v) {
        cdf += hist[v];
        map[v] = static_cast<std::uint8_t>(std::clamp(
            std::lround(255.0 * static_cast<double>(cdf) / static_cast<double>(gray.data.size())),
            0L, 255L));
    }
    ImageU8 out = gray;
    for (auto& v : out.data) v = map[v];
    return out;
}

// Straight per-pixel bilinear resampler used as the resize oracle.
ImageU8 resize_ref(const ImageU8& img, int ow, int oh) {
    ImageU8 out = ImageU8::make(ow, oh, img.channels, img.colorspace);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double sy = (y + 0.5) * img.height / oh - 0.5;
            double sx = (x + 0.5) * img.width / ow - 0.5;
            sy = std::clamp(sy, 0.0, img.height - 1.0);
            sx = std::clamp(sx, 0.0, img.width - 1.0);
            const int y0 = static_cast<int>(sy), x0 = static_cast<int>(sx);
            const int y1 = std::min(y0 + 1, img.height - 1);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double fy = sy - y0, fx = sx - x0;
            for (int c = 0; c < img.channels; ++c) {
                const double v = (1 - fy) * ((1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c)) +
                                 fy * ((1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c));
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("CIELAB frozen reference values") {
    // expected bytes from the standard sRGB D65 reference formulas
    struct Case {
        std::uint8_t r, g, b;
        std::uint8_t l8, a8, b8;
    };
    const Case cases[] = {
        {255, 255, 255, 255, 128, 128},
        {0, 0, 0, 0, 128, 128},
        {119, 119, 119, 128, 128, 128},  // L = 50.0344
        {255, 0, 0, 136, 208, 195},
        {0, 128, 255, 140, 147, 57},
    };
    for (const auto& c : cases) {
        ImageU8 lab = rgb_to_lab(solid_rgb(c.r, c.g, c.b));
        CHECK(lab.colorspace == ColorSpace::Lab);
        CHECK(static_cast<int>(lab.data[0]) == c.l8);
        CHECK(static_cast<int>(lab.data[1]) == c.a8);
        CHECK(static_cast<int>(lab.data[2]) == c.b8);
    }
}

TEST_CASE("CIELAB round trip recovers RGB within quantization bounds") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto r = static_cast<std::uint8_t>(rng.uniform_int(256));
        const auto g = static_cast<std::uint8_t>(rng.uniform_int(256));
        const auto b = static_cast<std::uint8_t>(rng.uniform_int(256));
        ImageU8 lab = rgb_to_lab(solid_rgb(r, g, b, 1, 1));
        double rr, gg, bb;
        lab_to_rgb_ref(lab.data[0], lab.data[1], lab.data[2], rr, gg, bb);
        CHECK(std::abs(rr - r) <= 2.0);
        CHECK(std::abs(gg - g) <= 2.0);
        CHECK(std::abs(bb - b) <= 2.0);
    }
}

TEST_CASE("colorspace tags are enforced") {
    ImageU8 gray = fixtures::const_gray(10);
    CHECK_THROWS_AS(rgb_to_lab(gray), ValidationError);
    CHECK_THROWS_AS(rgb_to_hsv(gray), ValidationError);
    ImageU8 bad = solid_rgb(1, 2, 3);
    bad.colorspace = ColorSpace::Gray;  // inconsistent with 3 channels
    CHECK_THROWS_AS(validate_image(bad), ValidationError);
}

TEST_CASE("HSV frozen reference values") {
    struct Case {
        std::uint8_t r, g, b;
        std::uint8_t h8, s8, v8;
    };
    const Case cases[] = {
        {255, 0, 0, 0, 255, 255},
        {128, 64, 0, 21, 255, 128},
        {100, 100, 100, 0, 0, 100},
        {0, 255, 0, 85, 255, 255},
    };
    for (const auto& c : cases) {
        ImageU8 hsv = rgb_to_hsv(solid_rgb(c.r, c.g, c.b));
        CHECK(static_cast<int>(hsv.data[0]) == c.h8);
        CHECK(static_cast<int>(hsv.data[1]) == c.s8);
        CHECK(static_cast<int>(hsv.data[2]) == c.v8);
    }
}

TEST_CASE("gray pixels have zero saturation") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const auto v = static_cast<std::uint8_t>(rng.uniform_int(256));
        ImageU8 hsv = rgb_to_hsv(solid_rgb(v, v, v, 1, 1));
        CHECK(static_cast<int>(hsv.data[1]) == 0);
    }
}

TEST_CASE("channel extraction") {
    ImageU8 img = solid_rgb(10, 20, 30, 2, 2);
    CHECK(static_cast<int>(channel_extract(img, 0).data[0]) == 10);
    CHECK(static_cast<int>(channel_extract(img, 1).data[0]) == 20);
    CHECK(static_cast<int>(channel_extract(img, 2).data[0]) == 30);
    CHECK_THROWS_AS(channel_extract(img, 3), ValidationError);
}

TEST_CASE("CLAHE with one tile and unbounded clip equals global equalization") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        ImageU8 img = fixtures::blur3(fixtures::noise_gray(seed, 48, 40));
        ClaheOptions opts;
        opts.clip_limit = kInf;
        opts.grid_rows = 1;
        opts.grid_cols = 1;
        ImageU8 ours = clahe(img, opts);
        ImageU8 ref = global_equalize_ref(img);
        CHECK(ours.data == ref.data);
    }
}

TEST_CASE("CLAHE maps a constant image to a constant image") {
    for (std::uint8_t v : {0, 7, 128, 255}) {
        ImageU8 img = fixtures::const_gray(v, 40, 32);
        ImageU8 out = clahe(img);
        for (auto p : out.data) CHECK(p == out.data[0]);
    }
}

TEST_CASE("CLAHE single-tile mapping is monotone under the default clip") {
    for (std::uint64_t seed : {3ULL, 4ULL}) {
        ImageU8 img = fixtures::noise_gray(seed, 64, 64);
        ClaheOptions opts;
        opts.grid_rows = 1;
        opts.grid_cols = 1;
        ImageU8 out = clahe(img, opts);
        // recover the per-value mapping and check it never decreases
        std::array<int, 256> map;
        map.fill(-1);
        for (std::size_t i = 0; i < img.data.size(); ++i) {
            map[img.data[i]] = out.data[i];
        }
        int prev = -1;
        for (int v = 0; v < 256; ++v) {
            if (map[v] < 0) continue;
            CHECK(map[v] >= prev);
            prev = map[v];
        }
    }
}

TEST_CASE("CLAHE default parameters change the histogram of natural fixtures") {
    ImageU8 soft = fixtures::blur3(fixtures::blur3(fixtures::noise_gray(11, 64, 64)));
    ImageU8 out = clahe(soft);
    CHECK(histogram_distance(histogram(out), histogram(soft)) > 0.0);
}

TEST_CASE("CLAHE validates inputs") {
    ImageU8 rgb = solid_rgb(1, 2, 3);
    CHECK_THROWS_AS(clahe(rgb), ValidationError);
    ImageU8 gray = fixtures::noise_gray(1, 16, 16);
    ClaheOptions opts;
    opts.grid_rows = 0;
    CHECK_THROWS_AS(clahe(gray, opts), ConfigError);
}

TEST_CASE("CLAHE handles grids that do not divide the image") {
    ImageU8 img = fixtures::noise_gray(13, 50, 34);  // 50/8, 34/8 leave remainders
    ImageU8 out = clahe(img);
    CHECK(out.width == 50);
    CHECK(out.height == 34);
}

TEST_CASE("gamma correction frozen values") {
    ImageU8 img = fixtures::const_gray(128, 2, 2);
    CHECK(static_cast<int>(gamma_correct(img, 0.5).data[0]) == 64);  // 255*(128/255)^2
    ImageU8 img64 = fixtures::const_gray(64, 2, 2);
    CHECK(static_cast<int>(gamma_correct(img64, 2.0).data[0]) == 128);  // 255*sqrt(64/255)
    ImageU8 ramp = fixtures::ramp_gray(16, 16);
    CHECK(gamma_correct(ramp, 1.0).data == ramp.data);
    CHECK_THROWS_AS(gamma_correct(ramp, 0.0), ConfigError);
    CHECK_THROWS_AS(gamma_correct(ramp, -1.0), ConfigError);
}

TEST_CASE("gamma correction is monotone for any gamma") {
    for (double g : {0.25, 0.5, 1.0, 1.7, 2.0, 4.0}) {
        ImageU8 ramp = ImageU8::make(256, 1, 1, ColorSpace::Gray);
        for (int x = 0; x < 256; ++x) ramp.at(x, 0) = static_cast<std::uint8_t>(x);
        ImageU8 out = gamma_correct(ramp, g);
        for (int x = 1; x < 256; ++x) CHECK(out.at(x, 0) >= out.at(x - 1, 0));
    }
}

TEST_CASE("gamma 0.5 darkens and gamma 2.0 brightens non-constant fixtures") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ImageU8 img = fixtures::blur3(fixtures::noise_gray(seed, 32, 32));
        auto mean = [](const ImageU8& m) {
            double s = 0.0;
            for (auto v : m.data) s += v;
            return s / static_cast<double>(m.data.size());
        };
        CHECK(mean(gamma_correct(img, 0.5)) < mean(img));
        CHECK(mean(gamma_correct(img, 2.0)) > mean(img));
    }
}

TEST_CASE("resize to the same size is the identity") {
    ImageU8 img = fixtures::noise_gray(17, 33, 21);
    ImageU8 out = resize_bilinear(img, 33, 21);
    CHECK(out.data == img.data);
}

TEST_CASE("resize matches the brute-force oracle") {
    // the 2x2 checkerboard upscaled to 4x4, plus assorted random shapes
    ImageU8 checker = ImageU8::make(2, 2, 1, ColorSpace::Gray);
    checker.at(0, 0) = 0;
    checker.at(1, 0) = 255;
    checker.at(0, 1) = 255;
    checker.at(1, 1) = 0;
    ImageU8 up = resize_bilinear(checker, 4, 4);
    ImageU8 ref = resize_ref(checker, 4, 4);
    CHECK(up.data == ref.data);
    CHECK(static_cast<int>(up.at(0, 0)) == 0);
    CHECK(static_cast<int>(up.at(3, 0)) == 255);
    CHECK(static_cast<int>(up.at(0, 3)) == 255);
    CHECK(static_cast<int>(up.at(3, 3)) == 0);

    ImageU8 img = fixtures::noise_gray(19, 37, 23);
    for (auto [w, h] : {std::pair{64, 64}, {16, 9}, {23, 37}, {5, 80}}) {
        CHECK(resize_bilinear(img, w, h).data == resize_ref(img, w, h).data);
    }
}

TEST_CASE("resize halves a 512 image to 256") {
    ImageU8 img = fixtures::noise_gray(23, 512, 512);
    ImageU8 out = resize_bilinear(img, 256, 256);
    CHECK(out.width == 256);
    CHECK(out.height == 256);
    CHECK_THROWS_AS(resize_bilinear(img, 0, 256), ConfigError);
}

TEST_CASE("histogram exact bin counts and distances") {
    ImageU8 img = fixtures::const_gray(7, 10, 10);
    Histogram256 h = histogram(img);
    CHECK(h.bins[7] == 100);
    CHECK(h.total == 100);
    CHECK(histogram_distance(h, h) == 0.0);

    Histogram256 a{}, b{};
    a.bins[0] = 50;
    a.total = 50;
    b.bins[255] = 10;
    b.total = 10;
    CHECK(histogram_distance(a, b) == doctest::Approx(2.0));
}

TEST_CASE("enhance pipeline keeps constant images constant and sizes fixed") {
    ImageU8 img = solid_rgb(120, 120, 120, 40, 30);
    std::vector<std::string> stages;
    ImageU8 out = enhance_pipeline(img, {}, &stages);
    CHECK(out.width == 256);
    CHECK(out.height == 256);
    CHECK(out.channels == 1);
    for (auto v : out.data) CHECK(v == out.data[0]);
    REQUIRE(stages.size() == 5);
    CHECK(stages[0] == "rgb_to_lab");
    CHECK(stages[1] == "channel_extract:L");
    CHECK(stages[2].substr(0, 6) == "clahe:");
    CHECK(stages[3] == "gamma:off");
    CHECK(stages[4] == "resize:256x256");
}

TEST_CASE("enhance pipeline changes the lightness histogram of a natural fixture") {
    ImageU8 rgb = fixtures::rgb_fixture(3, 64, 64);
    ImageU8 l_in = channel_extract(rgb_to_lab(rgb), 0);
    EnhanceOptions opts;
    ImageU8 out = enhance_pipeline(rgb, opts);
    CHECK(histogram_distance(histogram(out), histogram(l_in)) > 0.0);
}

TEST_CASE("enhance pipeline honors grid and gamma overrides in the stage log") {
    ImageU8 rgb = fixtures::rgb_fixture(5, 32, 32);
    EnhanceOptions opts;
    opts.clahe.grid_rows = 4;
    opts.clahe.grid_cols = 4;
    opts.gamma_enabled = true;
    opts.gamma = 1.5;
    opts.target_size = 64;
    std::vector<std::string> stages;
    enhance_pipeline(rgb, opts, &stages);
    CHECK(stages[2].find("grid=4x4") != std::string::npos);
    CHECK(stages[3].substr(0, 6) == "gamma:");
    CHECK(stages[3] != "gamma:off");
    CHECK(stages[4] == "resize:64x64");
}
