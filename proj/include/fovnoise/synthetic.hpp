#pragma once

// Seeded test imagery: natural-image-like textures with a 1/f amplitude
// spectrum plus hard-edged shapes, and panning crops for sequences.

#include "fovnoise/field.hpp"
#include "fovnoise/pipeline.hpp"

#include <cstdint>
#include <vector>

namespace fovnoise {

struct TextureParams {
  double mean = 0.5;     // display-encoded
  double stddev = 0.12;  // of the texture before shapes are added
  double slope = 1.0;    // amplitude ~ 1 / f^slope
  int shapes = 24;       // discs and rectangles
  double shape_contrast = 0.15;
  double saturation = 0.15;  // channel spread around the gray texture
};

/// Single-channel 1/f texture, zero mean, unit variance.
FieldMap pink_noise(Dims size, std::uint64_t seed, double slope = 1.0);

/// Display-encoded RGB texture in [0, 1].
Frame synthetic_image(Dims size, std::uint64_t seed, const TextureParams& params = {});

/// `count` crops of `size` from `source`, moving `step_x`, `step_y` pixels per frame.
std::vector<Frame> panning_crops(const Frame& source, Dims size, int count, int step_x, int step_y = 0);

}  // namespace fovnoise
