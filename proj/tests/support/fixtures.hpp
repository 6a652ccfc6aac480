#pragma once

// Deterministic synthetic fixtures shared across the test suites. All
// generators are integer-only (splitmix64 bytes, box blur with floor
// division) so expected values frozen from an independent reference
// implementation reproduce bit-exactly.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>

#include "amdnet/image.hpp"
#include "amdnet/rng.hpp"
#include "amdnet/tensor.hpp"

namespace fixtures {

using amdnet::ColorSpace;
using amdnet::ImageU8;

inline ImageU8 noise_gray(std::uint64_t seed, int w = 64, int h = 64) {
    ImageU8 img = ImageU8::make(w, h, 1, ColorSpace::Gray);
    amdnet::Rng rng(seed);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.next_u64() & 0xFF);
    return img;
}

inline ImageU8 blur3(const ImageU8& img) {
    ImageU8 out = img;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                std::uint64_t sum = 0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int yy = std::clamp(y + dy, 0, img.height - 1);
                        const int xx = std::clamp(x + dx, 0, img.width - 1);
                        sum += img.at(xx, yy, c);
                    }
                }
                out.at(x, y, c) = static_cast<std::uint8_t>(sum / 9);
            }
        }
    }
    return out;
}

inline ImageU8 box_blur(const ImageU8& img, int radius) {
    ImageU8 out = img;
    const std::uint64_t count = static_cast<std::uint64_t>(2 * radius + 1) * (2 * radius + 1);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                std::uint64_t sum = 0;
                for (int dy = -radius; dy <= radius; ++dy) {
                    for (int dx = -radius; dx <= radius; ++dx) {
                        const int yy = std::clamp(y + dy, 0, img.height - 1);
                        const int xx = std::clamp(x + dx, 0, img.width - 1);
                        sum += img.at(xx, yy, c);
                    }
                }
                out.at(x, y, c) = static_cast<std::uint8_t>(sum / count);
            }
        }
    }
    return out;
}

inline ImageU8 ramp_gray(int w = 64, int h = 64) {
    ImageU8 img = ImageU8::make(w, h, 1, ColorSpace::Gray);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.at(x, y) = static_cast<std::uint8_t>((2 * x + 3 * y) % 256);
        }
    }
    return img;
}

inline ImageU8 disk_gray(int w, int h, int cx, int cy, int r, std::uint8_t inside,
                         std::uint8_t outside) {
    ImageU8 img = ImageU8::make(w, h, 1, ColorSpace::Gray, outside);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) img.at(x, y) = inside;
        }
    }
    return img;
}

inline ImageU8 checker_gray(int cell, std::uint8_t a, std::uint8_t b, int w = 64, int h = 64) {
    ImageU8 img = ImageU8::make(w, h, 1, ColorSpace::Gray);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.at(x, y) = ((x / cell + y / cell) % 2 == 0) ? a : b;
        }
    }
    return img;
}

inline ImageU8 invert(const ImageU8& img) {
    ImageU8 out = img;
    for (auto& v : out.data) v = static_cast<std::uint8_t>(255 - v);
    return out;
}

inline ImageU8 shift_wrap(const ImageU8& img, int dx, int dy) {
    ImageU8 out = img;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const int sx = ((x - dx) % img.width + img.width) % img.width;
            const int sy = ((y - dy) % img.height + img.height) % img.height;
            for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
        }
    }
    return out;
}

inline ImageU8 add_clamp(const ImageU8& img, int delta) {
    ImageU8 out = img;
    for (auto& v : out.data) {
        v = static_cast<std::uint8_t>(std::clamp(static_cast<int>(v) + delta, 0, 255));
    }
    return out;
}

inline ImageU8 const_gray(std::uint8_t v, int w = 64, int h = 64) {
    return ImageU8::make(w, h, 1, ColorSpace::Gray, v);
}

/// RGB fixture with structure in every channel.
inline ImageU8 rgb_fixture(std::uint64_t seed = 7, int w = 64, int h = 64) {
    ImageU8 img = ImageU8::make(w, h, 3, ColorSpace::Rgb);
    amdnet::Rng rng(seed);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.at(x, y, 0) = static_cast<std::uint8_t>((3 * x + y) % 256);
            img.at(x, y, 1) = static_cast<std::uint8_t>(
                (x - w / 2) * (x - w / 2) + (y - h / 2) * (y - h / 2) <= (w / 3) * (w / 3) ? 190
                                                                                          : 40);
            img.at(x, y, 2) = static_cast<std::uint8_t>(rng.next_u64() & 0xFF);
        }
    }
    return img;
}

/// Random tensor with entries uniform in [lo, hi).
inline amdnet::Tensor random_tensor(std::vector<int> shape, std::uint64_t seed, double lo = -1.0,
                                    double hi = 1.0) {
    amdnet::Tensor t(std::move(shape));
    amdnet::Rng rng(seed);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

/// Unique scratch directory under the system temp dir.
inline std::string temp_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("amdnet_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace fixtures
