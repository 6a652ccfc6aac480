#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace amdnet {

enum class ColorSpace { Rgb, Lab, Hsv, Gray };

std::string colorspace_name(ColorSpace cs);

/// 8-bit interleaved raster with explicit channel semantics.
struct ImageU8 {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 or 3
    ColorSpace colorspace = ColorSpace::Gray;
    std::vector<std::uint8_t> data;  // row-major, interleaved

    static ImageU8 make(int width, int height, int channels, ColorSpace cs,
                        std::uint8_t fill = 0);

    std::uint8_t& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

/// Throws ValidationError unless dimensions, channel count and colorspace
/// tag are mutually consistent.
void validate_image(const ImageU8& img);
void require_colorspace(const ImageU8& img, ColorSpace cs, const char* what);

/// sRGB -> linear -> XYZ (D65) -> CIELAB. L in [0,100] is stored as
/// round(L*255/100); a and b are offset by 128.
ImageU8 rgb_to_lab(const ImageU8& img);

/// Hexcone HSV; V = max(R,G,B). H is stored as round(h*255) with h in [0,1).
ImageU8 rgb_to_hsv(const ImageU8& img);

ImageU8 channel_extract(const ImageU8& img, int channel);

/// Rec.601 luma as a gray image (used by the quality gate).
ImageU8 to_gray_luma(const ImageU8& rgb);

/// Float-space converters shared by the HSV image ops and color jitter.
/// r,g,b in [0,255]; h in [0,1), s and v in [0,1].
void rgbf_to_hsvf(double r, double g, double b, double& h, double& s, double& v);
void hsvf_to_rgbf(double h, double s, double v, double& r, double& g, double& b);

struct Histogram256 {
    std::array<std::uint64_t, 256> bins{};
    std::uint64_t total = 0;
};

Histogram256 histogram(const ImageU8& gray);

/// L1 distance between the normalized histograms; in [0,2].
double histogram_distance(const Histogram256& a, const Histogram256& b);

void write_histogram_csv(const Histogram256& h, const std::string& path);

}  // namespace amdnet
