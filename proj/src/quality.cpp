#include "amdnet/quality.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>

#include "amdnet/errors.hpp"

namespace amdnet {

namespace {

// Clockwise Moore neighborhood starting West.
constexpr int kDx8[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr int kDy8[8] = {0, -1, -1, -1, 0, 1, 1, 1};

int direction_index(int dx, int dy) {
    for (int d = 0; d < 8; ++d) {
        if (kDx8[d] == dx && kDy8[d] == dy) return d;
    }
    return 0;
}

std::vector<double> sobel_magnitude(const ImageU8& gray) {
    const int w = gray.width, h = gray.height;
    std::vector<double> mag(static_cast<std::size_t>(w) * h, 0.0);
    auto px = [&](int x, int y) {
        return static_cast<double>(gray.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)));
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double gx = -px(x - 1, y - 1) + px(x + 1, y - 1) - 2.0 * px(x - 1, y) +
                              2.0 * px(x + 1, y) - px(x - 1, y + 1) + px(x + 1, y + 1);
            const double gy = -px(x - 1, y - 1) - 2.0 * px(x, y - 1) - px(x + 1, y - 1) +
                              px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1);
            mag[static_cast<std::size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy);
        }
    }
    return mag;
}

int otsu_threshold(const std::array<std::uint64_t, 256>& hist) {
    std::uint64_t total = 0;
    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) {
        total += hist[i];
        sum_all += static_cast<double>(i) * hist[i];
    }
    std::uint64_t w_b = 0;
    double sum_b = 0.0, best = -1.0;
    int threshold = 0;
    for (int i = 0; i < 256; ++i) {
        w_b += hist[i];
        if (w_b == 0) continue;
        const std::uint64_t w_f = total - w_b;
        if (w_f == 0) break;
        sum_b += static_cast<double>(i) * hist[i];
        const double m_b = sum_b / w_b;
        const double m_f = (sum_all - sum_b) / w_f;
        const double between = static_cast<double>(w_b) * w_f * (m_b - m_f) * (m_b - m_f);
        if (between > best) {
            best = between;
            threshold = i;
        }
    }
    return threshold;
}

// Moore-neighbor tracing of one component's outer boundary, starting at its
// first pixel in scan order (whose west neighbor is guaranteed outside).
Contour trace_boundary(const std::vector<int>& labels, int w, int h, int comp, int sx, int sy) {
    Contour c;
    auto inside = [&](int x, int y) {
        return x >= 0 && x < w && y >= 0 && y < h &&
               labels[static_cast<std::size_t>(y) * w + x] == comp;
    };
    c.points.emplace_back(sx, sy);
    int cx = sx, cy = sy;
    int bx = sx - 1, by = sy;  // backtrack point (outside)
    const std::size_t guard = 4 * static_cast<std::size_t>(w) * h + 16;
    std::size_t steps = 0;
    while (steps++ < guard) {
        const int db = direction_index(bx - cx, by - cy);
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
            const int d = (db + k) % 8;
            const int nx = cx + kDx8[d], ny = cy + kDy8[d];
            if (inside(nx, ny)) {
                found = d;
                break;
            }
            bx = nx;
            by = ny;
        }
        if (found < 0) break;  // isolated pixel
        cx += kDx8[found];
        cy += kDy8[found];
        if (cx == sx && cy == sy && bx == sx - 1 && by == sy) break;  // closed the loop
        c.points.emplace_back(cx, cy);
    }
    return c;
}

}  // namespace

ContourResult extract_contours(const ImageU8& gray) {
    require_colorspace(gray, ColorSpace::Gray, "extract_contours");
    if (gray.width < 3 || gray.height < 3) {
        throw PreconditionError("extract_contours needs an image of at least 3x3");
    }
    const int w = gray.width, h = gray.height;
    ContourResult result;

    const std::vector<double> mag = sobel_magnitude(gray);
    const double g_max = *std::max_element(mag.begin(), mag.end());
    if (g_max <= 0.0) return result;  // flat image: no edges

    std::array<std::uint64_t, 256> hist{};
    std::vector<std::uint8_t> scaled(mag.size());
    for (std::size_t i = 0; i < mag.size(); ++i) {
        scaled[i] = static_cast<std::uint8_t>(std::lround(mag[i] / g_max * 255.0));
        ++hist[scaled[i]];
    }
    int nonzero_bins = 0;
    for (auto b : hist) nonzero_bins += b > 0 ? 1 : 0;
    if (nonzero_bins < 2) return result;  // degenerate histogram

    const int threshold = otsu_threshold(hist);
    std::vector<int> labels(mag.size(), 0);  // 0 = background, else component id
    for (std::size_t i = 0; i < mag.size(); ++i) {
        if (scaled[i] > threshold) labels[i] = -1;  // unassigned edge pixel
    }

    int next_comp = 1;
    std::deque<std::pair<int, int>> queue;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (labels[static_cast<std::size_t>(y) * w + x] != -1) continue;
            const int comp = next_comp++;
            labels[static_cast<std::size_t>(y) * w + x] = comp;
            queue.emplace_back(x, y);
            while (!queue.empty()) {
                auto [qx, qy] = queue.front();
                queue.pop_front();
                for (int d = 0; d < 8; ++d) {
                    const int nx = qx + kDx8[d], ny = qy + kDy8[d];
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    if (labels[static_cast<std::size_t>(ny) * w + nx] == -1) {
                        labels[static_cast<std::size_t>(ny) * w + nx] = comp;
                        queue.emplace_back(nx, ny);
                    }
                }
            }
            Contour c = trace_boundary(labels, w, h, comp, x, y);
            if (c.points.size() >= 16) result.contours.push_back(std::move(c));
        }
    }

    if (!result.contours.empty()) {
        std::vector<std::uint8_t> seen(mag.size(), 0);
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& c : result.contours) {
            for (auto [px, py] : c.points) {
                const std::size_t i = static_cast<std::size_t>(py) * w + px;
                if (!seen[i]) {
                    seen[i] = 1;
                    sum += mag[i];
                    ++count;
                }
            }
        }
        result.sharpness = sum / static_cast<double>(count);
    }
    return result;
}

QualityReport assess_quality(const ImageU8& rgb, const QualityThresholds& thresholds) {
    require_colorspace(rgb, ColorSpace::Rgb, "assess_quality");
    QualityReport report;

    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
        const double y = 0.299 * rgb.data[p * 3] + 0.587 * rgb.data[p * 3 + 1] +
                         0.114 * rgb.data[p * 3 + 2];
        sum += y;
        sum_sq += y * y;
    }
    const double n = static_cast<double>(rgb.pixel_count());
    report.illumination = sum / n;
    report.contrast = std::sqrt(std::max(0.0, sum_sq / n - report.illumination * report.illumination));

    if (rgb.width >= 3 && rgb.height >= 3) {
        ContourResult contours = extract_contours(to_gray_luma(rgb));
        report.sharpness = contours.sharpness;
        report.contour_count = static_cast<int>(contours.contours.size());
    }

    if (report.illumination < thresholds.min_illumination) report.reasons.push_back("illumination-low");
    if (report.illumination > thresholds.max_illumination) report.reasons.push_back("illumination-high");
    if (report.contrast < thresholds.min_contrast) report.reasons.push_back("contrast");
    if (report.sharpness < thresholds.min_sharpness) report.reasons.push_back("sharpness");
    report.accept = report.reasons.empty();
    return report;
}

double mse(const ImageU8& a, const ImageU8& b) {
    validate_image(a);
    validate_image(b);
    if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
        throw ValidationError("mse requires identical dimensions and channel counts");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(a.data.size());
}

double psnr(const ImageU8& a, const ImageU8& b) {
    const double err = mse(a, b);
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / err);
}

double ssim(const ImageU8& a, const ImageU8& b) {
    require_colorspace(a, ColorSpace::Gray, "ssim");
    require_colorspace(b, ColorSpace::Gray, "ssim");
    if (a.width != b.width || a.height != b.height) {
        throw ValidationError("ssim requires identical dimensions");
    }
    if (a.width < 11 || a.height < 11) {
        throw PreconditionError("ssim needs images of at least 11x11");
    }

    // 11x11 Gaussian window, sigma 1.5, normalized.
    double w1[11];
    double norm = 0.0;
    for (int i = 0; i < 11; ++i) {
        const double d = i - 5;
        w1[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        norm += w1[i];
    }
    for (double& v : w1) v /= norm;

    constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
    constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

    double total = 0.0;
    std::size_t windows = 0;
    for (int y = 0; y + 11 <= a.height; ++y) {
        for (int x = 0; x + 11 <= a.width; ++x) {
            double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
            for (int j = 0; j < 11; ++j) {
                for (int i = 0; i < 11; ++i) {
                    const double wgt = w1[j] * w1[i];
                    const double pa = a.at(x + i, y + j);
                    const double pb = b.at(x + i, y + j);
                    mx += wgt * pa;
                    my += wgt * pb;
                    xx += wgt * pa * pa;
                    yy += wgt * pb * pb;
                    xy += wgt * pa * pb;
                }
            }
            const double vx = xx - mx * mx;
            const double vy = yy - my * my;
            const double cov = xy - mx * my;
            total += ((2.0 * mx * my + kC1) * (2.0 * cov + kC2)) /
                     ((mx * mx + my * my + kC1) * (vx + vy + kC2));
            ++windows;
        }
    }
    return total / static_cast<double>(windows);
}

}  // namespace amdnet
