#pragma once

#include <string>

#include "wnet/tensor.hpp"

namespace wnet::io {

/// Decodes an 8-bit PNG into a CHW float image in [0,1]. Grayscale files
/// come back as 1 channel, everything else as 3 (alpha is dropped,
/// palette/16-bit inputs are expanded/downconverted by libpng).
Image load_png(const std::string& path);

/// Encodes a CHW float image as 8-bit PNG (1 or 3 channels). Values are
/// clamped to [0,1] and rounded; the encoder settings are fixed so the
/// same tensor always produces the same bytes.
void save_png(const std::string& path, const Image& image);

}  // namespace wnet::io
