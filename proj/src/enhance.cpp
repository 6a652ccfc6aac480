#include "amdnet/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "amdnet/errors.hpp"

namespace amdnet {

namespace {

inline std::uint8_t clamp_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

using TileMap = std::array<std::uint8_t, 256>;

TileMap tile_mapping(const std::array<std::uint64_t, 256>& hist, std::uint64_t tile_pixels,
                     double clip_limit) {
    std::array<std::uint64_t, 256> bins = hist;
    if (std::isfinite(clip_limit)) {
        const std::uint64_t ceiling = std::max<std::uint64_t>(
            1, static_cast<std::uint64_t>(std::floor(clip_limit * tile_pixels / 256.0)));
        std::uint64_t excess = 0;
        for (auto& b : bins) {
            if (b > ceiling) {
                excess += b - ceiling;
                b = ceiling;
            }
        }
        const std::uint64_t share = excess / 256;
        const std::uint64_t rem = excess % 256;
        for (int i = 0; i < 256; ++i) {
            bins[i] += share + (static_cast<std::uint64_t>(i) < rem ? 1 : 0);
        }
    }
    TileMap map{};
    std::uint64_t cdf = 0;
    for (int v = 0; v < 256; ++v) {
        cdf += bins[v];
        map[v] = clamp_u8(255.0 * static_cast<double>(cdf) / static_cast<double>(tile_pixels));
    }
    return map;
}

}  // namespace

ImageU8 clahe(const ImageU8& gray, const ClaheOptions& opts) {
    require_colorspace(gray, ColorSpace::Gray, "clahe");
    if (opts.grid_rows < 1 || opts.grid_cols < 1) {
        throw ConfigError("clahe grid dimensions must be >= 1");
    }
    if (!(opts.clip_limit > 0.0)) throw ConfigError("clahe clip limit must be > 0");

    const int w = gray.width, h = gray.height;
    const int cols = opts.grid_cols, rows = opts.grid_rows;
    const int tile_w = (w + cols - 1) / cols;
    const int tile_h = (h + rows - 1) / rows;
    const std::uint64_t tile_pixels = static_cast<std::uint64_t>(tile_w) * tile_h;

    // Tile histograms over the edge-replicated padded image.
    std::vector<TileMap> maps(static_cast<std::size_t>(rows) * cols);
    for (int ty = 0; ty < rows; ++ty) {
        for (int tx = 0; tx < cols; ++tx) {
            std::array<std::uint64_t, 256> hist{};
            for (int y = ty * tile_h; y < (ty + 1) * tile_h; ++y) {
                const int sy = std::min(y, h - 1);
                for (int x = tx * tile_w; x < (tx + 1) * tile_w; ++x) {
                    const int sx = std::min(x, w - 1);
                    ++hist[gray.at(sx, sy)];
                }
            }
            maps[static_cast<std::size_t>(ty) * cols + tx] =
                tile_mapping(hist, tile_pixels, opts.clip_limit);
        }
    }

    ImageU8 out = ImageU8::make(w, h, 1, ColorSpace::Gray);
    for (int y = 0; y < h; ++y) {
        const double gy = (y + 0.5) / tile_h - 0.5;
        const int ty0 = static_cast<int>(std::floor(gy));
        const double fy = gy - ty0;
        const int ty0c = std::clamp(ty0, 0, rows - 1);
        const int ty1c = std::clamp(ty0 + 1, 0, rows - 1);
        for (int x = 0; x < w; ++x) {
            const double gx = (x + 0.5) / tile_w - 0.5;
            const int tx0 = static_cast<int>(std::floor(gx));
            const double fx = gx - tx0;
            const int tx0c = std::clamp(tx0, 0, cols - 1);
            const int tx1c = std::clamp(tx0 + 1, 0, cols - 1);
            const std::uint8_t v = gray.at(x, y);
            if (tx0c == tx1c && ty0c == ty1c) {
                out.at(x, y) = maps[static_cast<std::size_t>(ty0c) * cols + tx0c][v];
                continue;
            }
            const double m00 = maps[static_cast<std::size_t>(ty0c) * cols + tx0c][v];
            const double m01 = maps[static_cast<std::size_t>(ty0c) * cols + tx1c][v];
            const double m10 = maps[static_cast<std::size_t>(ty1c) * cols + tx0c][v];
            const double m11 = maps[static_cast<std::size_t>(ty1c) * cols + tx1c][v];
            const double top = (1.0 - fx) * m00 + fx * m01;
            const double bot = (1.0 - fx) * m10 + fx * m11;
            out.at(x, y) = clamp_u8((1.0 - fy) * top + fy * bot);
        }
    }
    return out;
}

ImageU8 gamma_correct(const ImageU8& img, double gamma) {
    validate_image(img);
    if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
    std::array<std::uint8_t, 256> lut;
    for (int v = 0; v < 256; ++v) {
        lut[v] = clamp_u8(255.0 * std::pow(v / 255.0, 1.0 / gamma));
    }
    ImageU8 out = img;
    for (auto& v : out.data) v = lut[v];
    return out;
}

ImageU8 resize_bilinear(const ImageU8& img, int out_width, int out_height) {
    validate_image(img);
    if (out_width < 1 || out_height < 1) throw ConfigError("resize target must be >= 1x1");

    ImageU8 out;
    out.width = out_width;
    out.height = out_height;
    out.channels = img.channels;
    out.colorspace = img.colorspace;
    out.data.resize(static_cast<std::size_t>(out_width) * out_height * img.channels);

    const double sx_scale = static_cast<double>(img.width) / out_width;
    const double sy_scale = static_cast<double>(img.height) / out_height;
    const int c = img.channels;
    for (int y = 0; y < out_height; ++y) {
        const double sy =
            std::clamp((y + 0.5) * sy_scale - 0.5, 0.0, static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(std::floor(sy));
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double fy = sy - y0;
        for (int x = 0; x < out_width; ++x) {
            const double sx =
                std::clamp((x + 0.5) * sx_scale - 0.5, 0.0, static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(std::floor(sx));
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double fx = sx - x0;
            for (int ch = 0; ch < c; ++ch) {
                const double top = (1.0 - fx) * img.at(x0, y0, ch) + fx * img.at(x1, y0, ch);
                const double bot = (1.0 - fx) * img.at(x0, y1, ch) + fx * img.at(x1, y1, ch);
                out.at(x, y, ch) = clamp_u8((1.0 - fy) * top + fy * bot);
            }
        }
    }
    return out;
}

ImageU8 enhance_pipeline(const ImageU8& rgb, const EnhanceOptions& opts,
                         std::vector<std::string>* stage_log) {
    require_colorspace(rgb, ColorSpace::Rgb, "enhance_pipeline");
    auto log = [&](const std::string& line) {
        if (stage_log) stage_log->push_back(line);
    };

    ImageU8 lab = rgb_to_lab(rgb);
    log("rgb_to_lab");
    ImageU8 l = channel_extract(lab, 0);
    log("channel_extract:L");
    ImageU8 eq = clahe(l, opts.clahe);
    log("clahe:clip=" + std::to_string(opts.clahe.clip_limit) + ",grid=" +
        std::to_string(opts.clahe.grid_rows) + "x" + std::to_string(opts.clahe.grid_cols));
    if (opts.gamma_enabled) {
        eq = gamma_correct(eq, opts.gamma);
        log("gamma:" + std::to_string(opts.gamma));
    } else {
        log("gamma:off");
    }
    ImageU8 resized = resize_bilinear(eq, opts.target_size, opts.target_size);
    log("resize:" + std::to_string(opts.target_size) + "x" + std::to_string(opts.target_size));
    return resized;
}

}  // namespace amdnet
