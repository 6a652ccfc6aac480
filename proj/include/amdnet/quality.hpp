#pragma once

#include <string>
#include <utility>
#include <vector>

#include "amdnet/image.hpp"

namespace amdnet {

struct Contour {
    std::vector<std::pair<int, int>> points;  // (x,y) in trace order
};

struct ContourResult {
    std::vector<Contour> contours;  // traced boundaries with >= 16 points
    double sharpness = 0.0;         // mean gradient magnitude over contour pixels
};

/// Sobel gradient magnitude -> Otsu threshold -> Moore border following on
/// the binary edge map. Contours shorter than 16 points are dropped.
ContourResult extract_contours(const ImageU8& gray);

struct QualityThresholds {
    double min_illumination = 20.0;
    double max_illumination = 235.0;
    double min_contrast = 15.0;
    double min_sharpness = 25.0;
};

struct QualityReport {
    double sharpness = 0.0;
    double illumination = 0.0;  // mean luminance in [0,255]
    double contrast = 0.0;      // luminance standard deviation
    int contour_count = 0;
    bool accept = false;
    std::vector<std::string> reasons;  // illumination-low/high, contrast, sharpness
};

/// Gate decision: reject when illumination leaves [min,max], contrast falls
/// below min_contrast or contour sharpness below min_sharpness.
QualityReport assess_quality(const ImageU8& rgb, const QualityThresholds& thresholds = {});

/// Mean squared pixel difference, averaged over all channels.
double mse(const ImageU8& a, const ImageU8& b);

/// 10*log10(255^2/MSE); +infinity for identical images.
double psnr(const ImageU8& a, const ImageU8& b);

/// Windowed structural similarity on gray images (11x11 Gaussian window,
/// sigma 1.5, C1=(0.01*255)^2, C2=(0.03*255)^2), averaged over fully
/// interior window positions. Requires both sides >= 11 pixels.
double ssim(const ImageU8& a, const ImageU8& b);

}  // namespace amdnet
