#include "amdnet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "amdnet/errors.hpp"

namespace amdnet {

void validate_augment_config(const AugmentConfig& cfg) {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(cfg.p_hflip) || !in01(cfg.p_vflip)) {
        throw ConfigError("flip probabilities must be in [0,1]");
    }
    if (!in01(cfg.brightness_delta)) throw ConfigError("brightness_delta must be in [0,1]");
    if (!(cfg.contrast_low > 0.0) || cfg.contrast_low > cfg.contrast_high) {
        throw ConfigError("contrast range must satisfy 0 < low <= high");
    }
    if (!(cfg.saturation_low > 0.0) || cfg.saturation_low > cfg.saturation_high) {
        throw ConfigError("saturation range must satisfy 0 < low <= high");
    }
    if (cfg.hue_delta < 0.0 || cfg.hue_delta > 0.5) throw ConfigError("hue_delta must be in [0,0.5]");
    if (cfg.shift_fraction < 0.0 || cfg.shift_fraction >= 1.0) {
        throw ConfigError("shift_fraction must be in [0,1)");
    }
}

ImageU8 flip_horizontal(const ImageU8& img) {
    validate_image(img);
    ImageU8 out = img;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
            }
        }
    }
    return out;
}

ImageU8 flip_vertical(const ImageU8& img) {
    validate_image(img);
    ImageU8 out = img;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                out.at(x, y, c) = img.at(x, img.height - 1 - y, c);
            }
        }
    }
    return out;
}

ImageU8 translate(const ImageU8& img, int dx, int dy) {
    validate_image(img);
    ImageU8 out = ImageU8::make(img.width, img.height, img.channels, img.colorspace);
    for (int y = 0; y < img.height; ++y) {
        const int sy = y - dy;
        if (sy < 0 || sy >= img.height) continue;
        for (int x = 0; x < img.width; ++x) {
            const int sx = x - dx;
            if (sx < 0 || sx >= img.width) continue;
            for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
        }
    }
    return out;
}

ImageU8 random_flip(const ImageU8& img, Rng& rng, const AugmentConfig& cfg) {
    validate_augment_config(cfg);
    const bool do_h = rng.bernoulli(cfg.p_hflip);
    const bool do_v = rng.bernoulli(cfg.p_vflip);
    ImageU8 out = img;
    if (do_h) out = flip_horizontal(out);
    if (do_v) out = flip_vertical(out);
    return out;
}

ImageU8 color_jitter(const ImageU8& rgb, Rng& rng, const AugmentConfig& cfg) {
    require_colorspace(rgb, ColorSpace::Rgb, "color_jitter");
    validate_augment_config(cfg);
    const double brightness = rng.uniform(-cfg.brightness_delta, cfg.brightness_delta);
    const double contrast = rng.uniform(cfg.contrast_low, cfg.contrast_high);
    const double saturation = rng.uniform(cfg.saturation_low, cfg.saturation_high);
    const double hue = rng.uniform(-cfg.hue_delta, cfg.hue_delta);

    std::vector<double> px(rgb.data.begin(), rgb.data.end());

    if (brightness != 0.0) {
        const double add = brightness * 255.0;
        for (double& v : px) v = std::clamp(v + add, 0.0, 255.0);
    }
    if (contrast != 1.0) {
        double mean = 0.0;
        for (double v : px) mean += v;
        mean /= static_cast<double>(px.size());
        for (double& v : px) v = std::clamp((v - mean) * contrast + mean, 0.0, 255.0);
    }
    if (saturation != 1.0 || hue != 0.0) {
        for (std::size_t i = 0; i < px.size(); i += 3) {
            double h, s, v;
            rgbf_to_hsvf(px[i], px[i + 1], px[i + 2], h, s, v);
            s = std::clamp(s * saturation, 0.0, 1.0);
            h += hue;  // hsvf_to_rgbf wraps
            hsvf_to_rgbf(h, s, v, px[i], px[i + 1], px[i + 2]);
        }
    }

    ImageU8 out = rgb;
    for (std::size_t i = 0; i < px.size(); ++i) {
        out.data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(px[i]), 0L, 255L));
    }
    return out;
}

ImageU8 random_shift(const ImageU8& img, Rng& rng, const AugmentConfig& cfg) {
    validate_image(img);
    validate_augment_config(cfg);
    const int max_dx = static_cast<int>(std::floor(cfg.shift_fraction * img.width));
    const int max_dy = static_cast<int>(std::floor(cfg.shift_fraction * img.height));
    const int dx = static_cast<int>(rng.uniform_int(2 * static_cast<std::uint64_t>(max_dx) + 1)) - max_dx;
    const int dy = static_cast<int>(rng.uniform_int(2 * static_cast<std::uint64_t>(max_dy) + 1)) - max_dy;
    if (dx == 0 && dy == 0) return img;
    return translate(img, dx, dy);
}

ImageU8 augment(const ImageU8& rgb, Rng& rng, const AugmentConfig& cfg) {
    ImageU8 out = random_flip(rgb, rng, cfg);
    out = color_jitter(out, rng, cfg);
    out = random_shift(out, rng, cfg);
    return out;
}

}  // namespace amdnet
