#ifndef PROGRADE_COLORSPACE_HPP
#define PROGRADE_COLORSPACE_HPP

#include "prograde/image.hpp"

namespace prograde {

// Optical density per channel: O = -log((I + 1) / 256), natural logarithm.
OdImage rgb_to_od(const RgbImage& image);

// Inverse transform: I = round(256 * exp(-O) - 1), clamped to [0, 255].
RgbImage od_to_rgb(const OdImage& od);

// sRGB (gamma-decoded, D65, 2 degree observer) to CIE L*a*b*.
LabImage rgb_to_lab(const RgbImage& image);

// Scalar versions used by the image conversions and by tests.
double channel_to_od(std::uint8_t intensity);
std::uint8_t od_to_channel(double od);

} // namespace prograde

#endif
