#include "prograde/colorspace.hpp"

#include <algorithm>
#include <cmath>

namespace prograde {

double channel_to_od(std::uint8_t intensity) {
    return -std::log((static_cast<double>(intensity) + 1.0) / 256.0);
}

std::uint8_t od_to_channel(double od) {
    double v = std::round(256.0 * std::exp(-od) - 1.0);
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

OdImage rgb_to_od(const RgbImage& image) {
    OdImage od(image.width, image.height);
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        od.values[i] = channel_to_od(image.pixels[i]);
    }
    return od;
}

RgbImage od_to_rgb(const OdImage& od) {
    RgbImage image(od.width, od.height);
    for (std::size_t i = 0; i < od.values.size(); ++i) {
        image.pixels[i] = od_to_channel(od.values[i]);
    }
    return image;
}

namespace {

double srgb_decode(std::uint8_t v8) {
    double c = v8 / 255.0;
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
    constexpr double d = 6.0 / 29.0;
    return t > d * d * d ? std::cbrt(t) : t / (3.0 * d * d) + 4.0 / 29.0;
}

} // namespace

LabImage rgb_to_lab(const RgbImage& image) {
    // Precompute the decode table once per call; 256 entries.
    double decode[256];
    for (int i = 0; i < 256; ++i) decode[i] = srgb_decode(static_cast<std::uint8_t>(i));

    // D65 reference white.
    constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;

    LabImage lab(image.width, image.height);
    const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
    for (std::size_t i = 0; i < n; ++i) {
        double r = decode[image.pixels[3 * i + 0]];
        double g = decode[image.pixels[3 * i + 1]];
        double b = decode[image.pixels[3 * i + 2]];
        double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
        double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
        double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
        double fx = lab_f(x / xn), fy = lab_f(y / yn), fz = lab_f(z / zn);
        lab.values[3 * i + 0] = std::clamp(116.0 * fy - 16.0, 0.0, 100.0);
        lab.values[3 * i + 1] = 500.0 * (fx - fy);
        lab.values[3 * i + 2] = 200.0 * (fy - fz);
    }
    return lab;
}

} // namespace prograde
