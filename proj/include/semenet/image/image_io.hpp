#pragma once

#include <filesystem>

#include "semenet/image/image.hpp"

namespace semenet {

/// Reads 8-bit PNG (gray or colour) or binary PGM (P5). Colour input is
/// converted with BT.601 luma weights. The format is sniffed from the
/// file's magic bytes.
GrayImage read_gray(const std::filesystem::path& path);

/// Writes by extension: ".pgm" gives P5, anything else PNG.
void write_gray(const std::filesystem::path& path, const GrayImage& img);
void write_png(const std::filesystem::path& path, const GrayImage& img);
void write_png(const std::filesystem::path& path, const RgbImage& img);
/// Exactly "P5\n<w> <h>\n255\n" followed by the raw samples.
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

}  // namespace semenet
