#include "fovnoise/gabor.hpp"

#include "fovnoise/errors.hpp"
#include "fovnoise/noise_params.hpp"
#include "fovnoise/parallel.hpp"

#include <algorithm>
#include <complex>
#include <random>

namespace fovnoise {

std::uint64_t cell_seed(std::uint64_t seed, std::int64_t cx, std::int64_t cy) {
  std::uint64_t h = SplitMix64::finalize(seed ^ 0x6a09e667f3bcc909ULL);
  h = SplitMix64::finalize(h ^ static_cast<std::uint64_t>(cx) * 0x9e3779b97f4a7c15ULL);
  h = SplitMix64::finalize(h ^ static_cast<std::uint64_t>(cy) * 0xc2b2ae3d27d4eb4fULL);
  return h;
}

int GaborGrid::impulses_per_cell() const {
  const double r = kernel_radius_px();
  const double cell_area = static_cast<double>(cell_size_px()) * cell_size_px();
  return std::max(1, static_cast<int>(std::lround(impulses_per_kernel * cell_area / (std::numbers::pi * r * r))));
}

void GaborGrid::validate() const {
  if (!(bandwidth > 0.0 && bandwidth < 1.0)) throw ConfigError("gabor grid: bandwidth must lie in (0, 1)");
  if (impulses_per_kernel < 1) throw ConfigError("gabor grid: impulses_per_kernel must be >= 1");
}

std::span<const Impulse> ImpulseSet::cell(std::int32_t cx, std::int32_t cy) const {
  const std::int32_t ix = cx - first_cell_x;
  const std::int32_t iy = cy - first_cell_y;
  if (ix < 0 || iy < 0 || ix >= cells_x || iy >= cells_y) return {};
  const auto c = static_cast<std::size_t>(iy) * static_cast<std::size_t>(cells_x) + static_cast<std::size_t>(ix);
  return {impulses.data() + cell_offsets[c], cell_offsets[c + 1] - cell_offsets[c]};
}

ImpulseSet generate_impulses(const GaborGrid& grid, Dims image) {
  grid.validate();
  const int size = grid.cell_size_px();
  ImpulseSet set;
  set.grid = grid;
  set.image = image;
  set.first_cell_x = -1;
  set.first_cell_y = -1;
  set.cells_x = static_cast<std::int32_t>((image.width + size - 1) / size) + 2;
  set.cells_y = static_cast<std::int32_t>((image.height + size - 1) / size) + 2;

  const int per_cell = grid.impulses_per_cell();
  const auto n_cells = static_cast<std::size_t>(set.cells_x) * static_cast<std::size_t>(set.cells_y);
  set.impulses.resize(n_cells * static_cast<std::size_t>(per_cell));
  set.cell_offsets.resize(n_cells + 1);
  for (std::size_t c = 0; c <= n_cells; ++c) set.cell_offsets[c] = c * static_cast<std::size_t>(per_cell);

  parallel_rows(set.cells_y, [&](std::ptrdiff_t r0, std::ptrdiff_t r1) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::ptrdiff_t iy = r0; iy < r1; ++iy) {
      for (std::int32_t ix = 0; ix < set.cells_x; ++ix) {
        const std::int32_t cx = ix + set.first_cell_x;
        const std::int32_t cy = static_cast<std::int32_t>(iy) + set.first_cell_y;
        SplitMix64 rng(cell_seed(grid.seed, cx, cy));
        const std::size_t base = (static_cast<std::size_t>(iy) * static_cast<std::size_t>(set.cells_x) +
                                  static_cast<std::size_t>(ix)) * static_cast<std::size_t>(per_cell);
        for (int k = 0; k < per_cell; ++k) {
          Impulse& imp = set.impulses[base + static_cast<std::size_t>(k)];
          // Cell (cx, cy) spans pixel-center coordinates [cx*size - 0.5, (cx+1)*size - 0.5).
          imp.x = (cx + unit(rng)) * size - 0.5;
          imp.y = (cy + unit(rng)) * size - 0.5;
          imp.weight = 2.0 * unit(rng) - 1.0;
          imp.stream = rng();
          imp.cell_x = cx;
          imp.cell_y = cy;
        }
      }
    }
  });
  return set;
}

std::optional<KernelParams> resolve_impulse(const Impulse& impulse, const NoiseFields& fields) {
  const double amplitude = sample_nearest(fields.amplitude, impulse.x, impulse.y);
  if (!(amplitude > 0.0)) return std::nullopt;
  const double f_low = sample_nearest(fields.f_low, impulse.x, impulse.y);
  const double f_high = sample_nearest(fields.f_high, impulse.x, impulse.y);
  if (!(f_high > 0.0) || !(f_low > 0.0) || f_low > f_high) return std::nullopt;
  const FrequencySpec spec = frequency_spec(f_low, f_high, fields.s_f);
  SplitMix64 rng(impulse.stream);
  const double f_cpd = sample_frequency(spec, rng);
  const double deg_per_px = sample_nearest(fields.deg_per_px, impulse.x, impulse.y);
  KernelParams p;
  p.frequency = std::min(f_cpd * deg_per_px, 0.5);
  p.amplitude = amplitude;
  p.orientation = sample_nearest(fields.orientation, impulse.x, impulse.y);
  return p;
}

std::vector<ResolvedImpulse> resolve_impulses(const ImpulseSet& set, const NoiseFields& fields) {
  std::vector<std::optional<KernelParams>> params(set.impulses.size());
  parallel_rows(static_cast<std::ptrdiff_t>(set.impulses.size()), [&](std::ptrdiff_t i0, std::ptrdiff_t i1) {
    for (std::ptrdiff_t i = i0; i < i1; ++i)
      params[static_cast<std::size_t>(i)] = resolve_impulse(set.impulses[static_cast<std::size_t>(i)], fields);
  });
  std::vector<ResolvedImpulse> out;
  out.reserve(set.impulses.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]) continue;
    const auto& imp = set.impulses[i];
    out.push_back({imp.x, imp.y, imp.weight, *params[i]});
  }
  return out;
}

std::vector<ResolvedImpulse> resolve_impulses(const ImpulseSet& set, const KernelParams& constant) {
  std::vector<ResolvedImpulse> out;
  out.reserve(set.impulses.size());
  for (const auto& imp : set.impulses) out.push_back({imp.x, imp.y, imp.weight, constant});
  return out;
}

namespace {

void splat_one(const ResolvedImpulse& imp, double a, double radius, Eigen::Index row_begin, Eigen::Index row_end,
               FieldMap& out, std::vector<double>& env_x) {
  const double scale = imp.weight * imp.params.amplitude;
  if (scale == 0.0) return;
  const Eigen::Index w = out.cols();
  const auto y_lo = std::max<Eigen::Index>(row_begin, static_cast<Eigen::Index>(std::ceil(imp.y - radius)));
  const auto y_hi = std::min<Eigen::Index>(row_end - 1, static_cast<Eigen::Index>(std::floor(imp.y + radius)));
  if (y_lo > y_hi) return;
  const auto x_lo_all = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::ceil(imp.x - radius)));
  const auto x_hi_all = std::min<Eigen::Index>(w - 1, static_cast<Eigen::Index>(std::floor(imp.x + radius)));
  if (x_lo_all > x_hi_all) return;

  const double pa2 = std::numbers::pi * a * a;
  const double two_pi_f = 2.0 * std::numbers::pi * imp.params.frequency;
  const double kx = two_pi_f * std::cos(imp.params.orientation);
  const double ky = two_pi_f * std::sin(imp.params.orientation);
  const double r2_max = radius * radius;

  env_x.resize(static_cast<std::size_t>(x_hi_all - x_lo_all + 1));
  for (Eigen::Index x = x_lo_all; x <= x_hi_all; ++x) {
    const double dx = static_cast<double>(x) - imp.x;
    env_x[static_cast<std::size_t>(x - x_lo_all)] = std::exp(-pa2 * dx * dx);
  }
  const std::complex<double> step = std::polar(1.0, kx);

  for (Eigen::Index y = y_lo; y <= y_hi; ++y) {
    const double dy = static_cast<double>(y) - imp.y;
    const double rem = r2_max - dy * dy;
    if (rem < 0.0) continue;
    const double half = std::sqrt(rem);
    const auto x_lo = std::max<Eigen::Index>(x_lo_all, static_cast<Eigen::Index>(std::ceil(imp.x - half)));
    const auto x_hi = std::min<Eigen::Index>(x_hi_all, static_cast<Eigen::Index>(std::floor(imp.x + half)));
    if (x_lo > x_hi) continue;
    const double env_y = scale * std::exp(-pa2 * dy * dy);
    const double dx0 = static_cast<double>(x_lo) - imp.x;
    std::complex<double> phase = std::polar(1.0, kx * dx0 + ky * dy);
    float* row = &out(y, 0);
    for (Eigen::Index x = x_lo; x <= x_hi; ++x) {
      row[x] += static_cast<float>(env_y * env_x[static_cast<std::size_t>(x - x_lo_all)] * phase.real());
      phase *= step;
    }
  }
}

}  // namespace

FieldMap splat(std::span<const ResolvedImpulse> impulses, Dims image, double bandwidth) {
  if (!(bandwidth > 0.0)) throw ConfigError("splat: bandwidth must be positive");
  FieldMap out = FieldMap::Zero(image.height, image.width);
  const double radius = 1.0 / bandwidth;
  parallel_rows(image.height, [&](std::ptrdiff_t r0, std::ptrdiff_t r1) {
    std::vector<double> env_x;
    for (const auto& imp : impulses) {
      if (imp.y + radius < static_cast<double>(r0) || imp.y - radius > static_cast<double>(r1 - 1)) continue;
      splat_one(imp, bandwidth, radius, r0, r1, out, env_x);
    }
  });
  return out;
}

FieldMap synthesize(const ImpulseSet& set, const NoiseFields& fields) {
  const auto resolved = resolve_impulses(set, fields);
  return splat(resolved, set.image, set.grid.bandwidth);
}

}  // namespace fovnoise
