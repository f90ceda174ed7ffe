#pragma once

#include "fovnoise/field.hpp"
#include "fovnoise/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace fovnoise {

/// Reads an 8/16-bit PNG (display-encoded) or a linear EXR (encoded with the
/// sRGB curve after clamping to [0, 1]). Gray inputs are replicated, alpha dropped.
Frame read_image(const std::filesystem::path& path);

/// Writes by extension: .png (8- or 16-bit) or .exr (linear half RGBA).
void write_image(const std::filesystem::path& path, const Frame& frame, int png_bit_depth = 8);

std::vector<std::uint8_t> encode_png(const Frame& frame, int bit_depth = 8);
Frame decode_png(const std::vector<std::uint8_t>& bytes);

/// Single-channel float field from an EXR (R, or Y for luminance-only files).
FieldMap read_exr_field(const std::filesystem::path& path);
void write_exr_field(const std::filesystem::path& path, const FieldMap& field);

/// 16-bit grayscale PNG of (field - lo) / (hi - lo), for inspecting pyramids.
void write_png_field(const std::filesystem::path& path, const FieldMap& field, double lo, double hi);

}  // namespace fovnoise
