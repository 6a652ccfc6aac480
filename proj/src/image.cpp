#include "amdnet/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "amdnet/errors.hpp"

namespace amdnet {

std::string colorspace_name(ColorSpace cs) {
    switch (cs) {
        case ColorSpace::Rgb: return "RGB";
        case ColorSpace::Lab: return "LAB";
        case ColorSpace::Hsv: return "HSV";
        case ColorSpace::Gray: return "GRAY";
    }
    return "?";
}

ImageU8 ImageU8::make(int width, int height, int channels, ColorSpace cs, std::uint8_t fill) {
    ImageU8 img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.colorspace = cs;
    img.data.assign(static_cast<std::size_t>(width) * height * channels, fill);
    validate_image(img);
    return img;
}

void validate_image(const ImageU8& img) {
    if (img.width < 1 || img.height < 1) {
        throw ValidationError("image dimensions must be >= 1");
    }
    if (img.channels != 1 && img.channels != 3) {
        throw ValidationError("image must have 1 or 3 channels");
    }
    const bool gray = img.colorspace == ColorSpace::Gray;
    if (gray != (img.channels == 1)) {
        throw ValidationError("colorspace tag " + colorspace_name(img.colorspace) +
                              " inconsistent with " + std::to_string(img.channels) + " channels");
    }
    if (img.data.size() != img.pixel_count() * img.channels) {
        throw ValidationError("image data length does not match dimensions");
    }
}

void require_colorspace(const ImageU8& img, ColorSpace cs, const char* what) {
    validate_image(img);
    if (img.colorspace != cs) {
        throw ValidationError(std::string(what) + " expects " + colorspace_name(cs) +
                              " input, got " + colorspace_name(img.colorspace));
    }
}

namespace {

inline std::uint8_t clamp_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

inline double srgb_to_linear(double u8) {
    const double u = u8 / 255.0;
    return u > 0.04045 ? std::pow((u + 0.055) / 1.055, 2.4) : u / 12.92;
}

inline double lab_f(double t) {
    constexpr double kCube = 216.0 / 24389.0;
    return t > kCube ? std::cbrt(t) : (24389.0 / 27.0 * t + 16.0) / 116.0;
}

}  // namespace

ImageU8 rgb_to_lab(const ImageU8& img) {
    require_colorspace(img, ColorSpace::Rgb, "rgb_to_lab");
    ImageU8 out = img;
    out.colorspace = ColorSpace::Lab;
    for (std::size_t i = 0; i < img.data.size(); i += 3) {
        const double rl = srgb_to_linear(img.data[i]);
        const double gl = srgb_to_linear(img.data[i + 1]);
        const double bl = srgb_to_linear(img.data[i + 2]);
        const double x = (rl * 0.4124564 + gl * 0.3575761 + bl * 0.1804375) / 0.95047;
        const double y = rl * 0.2126729 + gl * 0.7151522 + bl * 0.0721750;
        const double z = (rl * 0.0193339 + gl * 0.1191920 + bl * 0.9503041) / 1.08883;
        const double fx = lab_f(x), fy = lab_f(y), fz = lab_f(z);
        const double l = 116.0 * fy - 16.0;
        const double a = 500.0 * (fx - fy);
        const double b = 200.0 * (fy - fz);
        out.data[i] = clamp_u8(l * 255.0 / 100.0);
        out.data[i + 1] = clamp_u8(a + 128.0);
        out.data[i + 2] = clamp_u8(b + 128.0);
    }
    return out;
}

void rgbf_to_hsvf(double r, double g, double b, double& h, double& s, double& v) {
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    v = mx / 255.0;
    s = mx <= 0.0 ? 0.0 : delta / mx;
    if (delta <= 0.0) {
        h = 0.0;
        return;
    }
    double hh;
    if (mx == r) {
        hh = (g - b) / delta;
        if (hh < 0.0) hh += 6.0;
    } else if (mx == g) {
        hh = (b - r) / delta + 2.0;
    } else {
        hh = (r - g) / delta + 4.0;
    }
    h = hh / 6.0;
    if (h >= 1.0) h -= 1.0;
}

void hsvf_to_rgbf(double h, double s, double v, double& r, double& g, double& b) {
    h -= std::floor(h);  // wrap into [0,1)
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r1 = 0, g1 = 0, b1 = 0;
    switch (static_cast<int>(hp)) {
        case 0: r1 = c; g1 = x; break;
        case 1: r1 = x; g1 = c; break;
        case 2: g1 = c; b1 = x; break;
        case 3: g1 = x; b1 = c; break;
        case 4: r1 = x; b1 = c; break;
        default: r1 = c; b1 = x; break;
    }
    const double m = v - c;
    r = (r1 + m) * 255.0;
    g = (g1 + m) * 255.0;
    b = (b1 + m) * 255.0;
}

ImageU8 rgb_to_hsv(const ImageU8& img) {
    require_colorspace(img, ColorSpace::Rgb, "rgb_to_hsv");
    ImageU8 out = img;
    out.colorspace = ColorSpace::Hsv;
    for (std::size_t i = 0; i < img.data.size(); i += 3) {
        double h, s, v;
        rgbf_to_hsvf(img.data[i], img.data[i + 1], img.data[i + 2], h, s, v);
        out.data[i] = clamp_u8(h * 255.0);
        out.data[i + 1] = clamp_u8(s * 255.0);
        out.data[i + 2] = static_cast<std::uint8_t>(std::max({img.data[i], img.data[i + 1],
                                                              img.data[i + 2]}));
    }
    return out;
}

ImageU8 channel_extract(const ImageU8& img, int channel) {
    validate_image(img);
    if (channel < 0 || channel >= img.channels) {
        throw ValidationError("channel index " + std::to_string(channel) + " out of range");
    }
    ImageU8 out = ImageU8::make(img.width, img.height, 1, ColorSpace::Gray);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        out.data[p] = img.data[p * img.channels + channel];
    }
    return out;
}

ImageU8 to_gray_luma(const ImageU8& rgb) {
    require_colorspace(rgb, ColorSpace::Rgb, "to_gray_luma");
    ImageU8 out = ImageU8::make(rgb.width, rgb.height, 1, ColorSpace::Gray);
    for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
        const double y = 0.299 * rgb.data[p * 3] + 0.587 * rgb.data[p * 3 + 1] +
                         0.114 * rgb.data[p * 3 + 2];
        out.data[p] = clamp_u8(y);
    }
    return out;
}

Histogram256 histogram(const ImageU8& gray) {
    require_colorspace(gray, ColorSpace::Gray, "histogram");
    Histogram256 h;
    for (std::uint8_t v : gray.data) ++h.bins[v];
    h.total = gray.data.size();
    return h;
}

double histogram_distance(const Histogram256& a, const Histogram256& b) {
    if (a.total == 0 || b.total == 0) {
        throw ValidationError("histogram_distance needs non-empty histograms");
    }
    double d = 0.0;
    for (int i = 0; i < 256; ++i) {
        d += std::abs(static_cast<double>(a.bins[i]) / static_cast<double>(a.total) -
                      static_cast<double>(b.bins[i]) / static_cast<double>(b.total));
    }
    return d;
}

void write_histogram_csv(const Histogram256& h, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open " + path);
    f << "bin,count\n";
    for (int i = 0; i < 256; ++i) f << i << ',' << h.bins[i] << '\n';
    if (!f) throw IoError("failed writing " + path);
}

}  // namespace amdnet
