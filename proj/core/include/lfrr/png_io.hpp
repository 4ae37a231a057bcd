#pragma once

#include <filesystem>

#include "lfrr/light_field.hpp"

namespace lfrr {

// Mosaic layout: the U*V sub-aperture views tiled row-major into one image,
// u selecting the tile row and v the tile column. Within a view, x is the
// pixel row and y the pixel column, so the image is (U*X) rows by (V*Y)
// columns. 8-bit channels, values mapped linearly between [0,1] and 0..255.
void write_png_mosaic(const std::filesystem::path& path, const LightField& lf);

// U and V must be supplied; the image carries no angular metadata. The image
// dimensions must be exact multiples of the view grid.
LightField read_png_mosaic(const std::filesystem::path& path, std::int64_t U,
                           std::int64_t V);

}  // namespace lfrr
