#pragma once

#include <filesystem>

#include "mve/image.hpp"

namespace mve::png {

// Decodes an 8-bit PNG (grayscale, palette, RGB or RGBA, with or without
// alpha) into RGBA. Throws UnreadableImage with the offending path.
RasterImage read_rgba(const std::filesystem::path& path);

void write_rgba(const std::filesystem::path& path, const RasterImage& img);
void write_grey(const std::filesystem::path& path, const GreyImage& img);

// foreground = 255, background = 0
void write_binary(const std::filesystem::path& path, const BinaryImage& img);

} // namespace mve::png
