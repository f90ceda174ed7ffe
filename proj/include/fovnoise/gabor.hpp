#pragma once

// Sparse Gabor convolution noise: Gabor kernels splatted at seeded random
// impulses laid out on a regular cell grid. Each cell has its own generator
// seeded from (seed, cell_x, cell_y), so impulse sets do not depend on
// evaluation order and are reproducible frame to frame.

#include "fovnoise/field.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace fovnoise {

/// SplitMix64: 64-bit state, one multiply-xorshift finalizer per draw.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return finalize(state_);
  }

  static constexpr std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Stream seed for cell (cx, cy).
std::uint64_t cell_seed(std::uint64_t seed, std::int64_t cx, std::int64_t cy);

inline constexpr double kDefaultGaborBandwidth = 0.06;  // cycles/px

struct GaborGrid {
  double bandwidth = kDefaultGaborBandwidth;  // Gaussian envelope parameter a
  int impulses_per_kernel = 12;
  std::uint64_t seed = 0;

  /// Envelope truncation radius 1/a, pixels.
  double truncation_radius() const { return 1.0 / bandwidth; }
  /// Kernel radius and cell side, ceil(1/a).
  int kernel_radius_px() const { return static_cast<int>(std::ceil(1.0 / bandwidth - 1e-9)); }
  int cell_size_px() const { return kernel_radius_px(); }
  /// Expected impulses in one cell for the requested density per kernel area.
  int impulses_per_cell() const;

  void validate() const;
};

/// exp(-pi a^2 r^2) cos(2 pi f0 (dx cos w + dy sin w)), zero past r = 1/a.
inline double kernel_eval(double f0, double omega, double a, double dx, double dy) {
  const double r2 = dx * dx + dy * dy;
  if (r2 * a * a > 1.0) return 0.0;
  return std::exp(-std::numbers::pi * a * a * r2) *
         std::cos(2.0 * std::numbers::pi * f0 * (dx * std::cos(omega) + dy * std::sin(omega)));
}

struct Impulse {
  double x = 0.0;  // pixel-center coordinates
  double y = 0.0;
  double weight = 0.0;       // uniform in [-1, 1]
  std::uint64_t stream = 0;  // seeds this impulse's frequency draw
  std::int32_t cell_x = 0;
  std::int32_t cell_y = 0;
};

/// Impulses grouped by cell, cells in row-major order. The grid extends one
/// cell beyond the image on every side so kernels near the border receive
/// the same density as the interior.
struct ImpulseSet {
  GaborGrid grid;
  Dims image;
  std::int32_t first_cell_x = 0;
  std::int32_t first_cell_y = 0;
  std::int32_t cells_x = 0;
  std::int32_t cells_y = 0;
  std::vector<Impulse> impulses;
  std::vector<std::size_t> cell_offsets;  // cells_x * cells_y + 1 entries

  std::span<const Impulse> cell(std::int32_t cx, std::int32_t cy) const;
};

ImpulseSet generate_impulses(const GaborGrid& grid, Dims image);

/// Gabor parameters attached to one impulse. Frequency in cycles/px.
struct KernelParams {
  double frequency = 0.0;
  double amplitude = 0.0;
  double orientation = 0.0;
};

struct ResolvedImpulse {
  double x;
  double y;
  double weight;
  KernelParams params;
};

/// Parameter fields sampled at impulse positions. Band limits are in cpd and
/// are converted with the local degrees-per-pixel; a location whose f_high is
/// not positive or whose f_low exceeds f_high carries no noise.
struct NoiseFields {
  const FieldMap& f_low;
  const FieldMap& f_high;
  const FieldMap& deg_per_px;
  const FieldMap& amplitude;
  const FieldMap& orientation;
  double s_f;
};

std::optional<KernelParams> resolve_impulse(const Impulse& impulse, const NoiseFields& fields);

std::vector<ResolvedImpulse> resolve_impulses(const ImpulseSet& set, const NoiseFields& fields);
std::vector<ResolvedImpulse> resolve_impulses(const ImpulseSet& set, const KernelParams& constant);

/// Sum of weighted, truncated Gabor kernels. Each output pixel accumulates
/// contributions in impulse order, independent of the thread count.
FieldMap splat(std::span<const ResolvedImpulse> impulses, Dims image, double bandwidth);

/// Full synthesis from parameter fields.
FieldMap synthesize(const ImpulseSet& set, const NoiseFields& fields);

}  // namespace fovnoise
