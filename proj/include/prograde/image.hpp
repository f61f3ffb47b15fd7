#ifndef PROGRADE_IMAGE_HPP
#define PROGRADE_IMAGE_HPP

#include <cstdint>
#include <vector>

namespace prograde {

// Interleaved 8-bit RGB raster.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // 3 * width * height, row-major RGB

    RgbImage() = default;
    RgbImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h),
          pixels(static_cast<std::size_t>(3) * w * h, fill) {}

    std::uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

// Single 8-bit greyscale plane.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> values;

    Plane() = default;
    Plane(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) {
        return values[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * width + x];
    }
};

// Per-pixel 3-vector of optical densities, values in [0, log 256].
struct OdImage {
    int width = 0;
    int height = 0;
    std::vector<double> values;  // 3 per pixel, row-major

    OdImage() = default;
    OdImage(int w, int h)
        : width(w), height(h), values(static_cast<std::size_t>(3) * w * h, 0.0) {}

    double& at(int x, int y, int c) {
        return values[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    double at(int x, int y, int c) const {
        return values[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

// CIE L*a*b*: L in [0, 100], a and b roughly in [-128, 127].
struct LabImage {
    int width = 0;
    int height = 0;
    std::vector<double> values;  // L, a, b per pixel

    LabImage() = default;
    LabImage(int w, int h)
        : width(w), height(h), values(static_cast<std::size_t>(3) * w * h, 0.0) {}

    double& at(int x, int y, int c) {
        return values[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    double at(int x, int y, int c) const {
        return values[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

// Per-pixel stain densities: plane 0 hematoxylin, 1 eosin, 2 third stain.
struct StainDensityImage {
    int width = 0;
    int height = 0;
    std::vector<double> values;  // 3 per pixel, row-major

    StainDensityImage() = default;
    StainDensityImage(int w, int h)
        : width(w), height(h), values(static_cast<std::size_t>(3) * w * h, 0.0) {}

    double& at(int x, int y, int c) {
        return values[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    double at(int x, int y, int c) const {
        return values[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

} // namespace prograde

#endif
