#pragma once

#include <string>
#include <vector>

#include "amdnet/image.hpp"

namespace amdnet {

struct ClaheOptions {
    double clip_limit = 2.0;  // +infinity disables clipping
    int grid_rows = 8;
    int grid_cols = 8;
};

/// Contrast-limited adaptive histogram equalization on a gray image.
/// Per-tile 256-bin histograms are clipped at clip_limit*(tile_pixels/256)
/// with the excess redistributed uniformly in a single pass (remainder goes
/// to bin 0 upward); each tile maps through its normalized CDF scaled to
/// [0,255]; pixels blend the four surrounding tile mappings bilinearly with
/// edge tiles extended. Images are padded by edge replication when the grid
/// does not divide them evenly.
ImageU8 clahe(const ImageU8& gray, const ClaheOptions& opts = {});

/// Power-law remap out = round(255*(in/255)^(1/gamma)) per channel, via a
/// 256-entry lookup table. gamma 0.5 darkens, gamma 2.0 brightens.
ImageU8 gamma_correct(const ImageU8& img, double gamma);

/// Bilinear resize with half-pixel-center sampling. Same-size input is
/// returned bit-identically.
ImageU8 resize_bilinear(const ImageU8& img, int out_width, int out_height);

struct EnhanceOptions {
    ClaheOptions clahe;
    bool gamma_enabled = false;
    double gamma = 1.0;
    int target_size = 256;
};

/// LAB L-channel -> CLAHE -> optional gamma -> resize. Appends one line per
/// stage to stage_log when given.
ImageU8 enhance_pipeline(const ImageU8& rgb, const EnhanceOptions& opts = {},
                         std::vector<std::string>* stage_log = nullptr);

}  // namespace amdnet
