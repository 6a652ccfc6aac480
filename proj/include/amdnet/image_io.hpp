#pragma once

#include <string>

#include "amdnet/image.hpp"

namespace amdnet {

/// True for .png/.jpg/.jpeg (case-insensitive).
bool is_supported_image(const std::string& filename);

/// Decodes a PNG or JPEG (detected by magic bytes) to an RGB image.
/// Grayscale and paletted files are expanded; alpha is stripped.
ImageU8 read_image(const std::string& path);

/// Writes a 1-channel or 3-channel image as PNG.
void write_png(const ImageU8& img, const std::string& path);

}  // namespace amdnet
