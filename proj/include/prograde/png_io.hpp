#ifndef PROGRADE_PNG_IO_HPP
#define PROGRADE_PNG_IO_HPP

#include "prograde/image.hpp"

#include <filesystem>

namespace prograde {

// Lossless 8-bit PNG read/write. Writes use a fixed compression setup so
// identical pixels produce identical files.
void write_png_rgb(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_png_rgb(const std::filesystem::path& path);

void write_png_gray(const std::filesystem::path& path, const Plane& plane);
Plane read_png_gray(const std::filesystem::path& path);

} // namespace prograde

#endif
