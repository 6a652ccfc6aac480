#pragma once

#include "amdnet/image.hpp"
#include "amdnet/rng.hpp"

namespace amdnet {

/// Training-time augmentation ranges. Defaults: 50% flips, brightness
/// +-0.1, contrast and saturation factors in [0.8,1.2], hue +-0.05 of the
/// full circle, shifts up to +-0.1 of each dimension.
struct AugmentConfig {
    double p_hflip = 0.5;
    double p_vflip = 0.5;
    double brightness_delta = 0.1;
    double contrast_low = 0.8;
    double contrast_high = 1.2;
    double saturation_low = 0.8;
    double saturation_high = 1.2;
    double hue_delta = 0.05;
    double shift_fraction = 0.1;
};

void validate_augment_config(const AugmentConfig& cfg);

ImageU8 flip_horizontal(const ImageU8& img);
ImageU8 flip_vertical(const ImageU8& img);

/// Integer translation with zero (black) fill for vacated pixels.
ImageU8 translate(const ImageU8& img, int dx, int dy);

/// Each axis flips independently with its configured probability.
/// Consumes exactly two draws.
ImageU8 random_flip(const ImageU8& img, Rng& rng, const AugmentConfig& cfg = {});

/// Brightness -> contrast -> saturation -> hue, in that order, with the
/// four factors drawn from the configured ranges. Consumes exactly four
/// draws.
ImageU8 color_jitter(const ImageU8& rgb, Rng& rng, const AugmentConfig& cfg = {});

/// Integer-pixel translation with |dx| <= floor(shift_fraction*width) and
/// |dy| <= floor(shift_fraction*height). Consumes exactly two draws.
ImageU8 random_shift(const ImageU8& img, Rng& rng, const AugmentConfig& cfg = {});

/// flip -> color_jitter -> shift with a pinned draw order, so (image, seed,
/// config) fully determines the output.
ImageU8 augment(const ImageU8& rgb, Rng& rng, const AugmentConfig& cfg = {});

}  // namespace amdnet
