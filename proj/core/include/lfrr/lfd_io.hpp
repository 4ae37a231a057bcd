#pragma once

#include <filesystem>

#include "lfrr/light_field.hpp"

namespace lfrr {

// Binary light-field container. Little-endian layout:
//   bytes 0..3   magic "LFD1"
//   byte  4      dtype code: 0 = f32, 1 = f64
//   byte  5      channel count C
//   bytes 6..7   reserved, zero
//   bytes 8..23  u32 U, V, X, Y
//   payload      U*V*X*Y*C values in the u-outermost, c-innermost layout
enum class LfdDtype : std::uint8_t { F32 = 0, F64 = 1 };

void write_lfd(const std::filesystem::path& path, const LightField& lf,
               LfdDtype dtype = LfdDtype::F64);

LightField read_lfd(const std::filesystem::path& path);

}  // namespace lfrr
