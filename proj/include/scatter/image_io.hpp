#pragma once

#include <filesystem>

#include "scatter/grid.hpp"

namespace scatter {

/// Reads PNG, binary PGM/PPM (8-bit, scaled to [0,1]) or RAWF float files.
/// The format is detected from the file's magic bytes.
ImageGrid read_image(const std::filesystem::path& path);

/// 8-bit PNG. Values are clamped to [0,1]; YUV images are converted to RGB first.
void write_png(const ImageGrid& img, const std::filesystem::path& path);

/// Binary PGM (1 channel) or PPM (3 channels), clamped to [0,1].
void write_pnm(const ImageGrid& img, const std::filesystem::path& path);

/// RAWF: "RAWF", u32 height, u32 width, u32 channels (little endian), then
/// planar little-endian float32 samples.
ImageGrid read_raw(const std::filesystem::path& path);
void write_raw(const ImageGrid& img, const std::filesystem::path& path);

/// Writes whichever format the extension names (.png, .pgm/.ppm, .raw).
void write_image(const ImageGrid& img, const std::filesystem::path& path);

}  // namespace scatter
