#include "fovnoise/noise_params.hpp"

#include "fovnoise/parallel.hpp"

#include <algorithm>
#include <numbers>

namespace fovnoise {

FrequencySpec frequency_spec(double f_low, double f_high, double s_f) {
  if (!(f_low > 0.0) || !(f_high > 0.0)) throw ConfigError("frequency_spec: limits must be positive");
  if (!(s_f > 0.0)) throw ConfigError("frequency_spec: s_f must be positive");
  FrequencySpec spec;
  spec.f_high = f_high;
  if (f_low > f_high) return spec;
  const double ln_low = std::log(f_low);
  spec.mu_n = 0.5 * (ln_low + std::log(f_high));
  spec.sigma_n = 0.5 * s_f * (spec.mu_n - ln_low);
  spec.empty = false;
  return spec;
}

CalibrationTable::CalibrationTable(std::vector<CalibrationRow> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw ConfigError("calibration table: no rows");
  for (std::size_t i = 1; i < rows_.size(); ++i)
    if (!(rows_[i].blur_rate > rows_[i - 1].blur_rate))
      throw ConfigError("calibration table: blur rates must increase");
}

const CalibrationTable& CalibrationTable::standard() {
  static const CalibrationTable table({{0.11, 0.15, 22.4, 3.45}, {0.34, 0.23, 21.02, 2.21}, {0.57, 0.28, 18.68, 2.19}});
  return table;
}

CalibrationRow CalibrationTable::interpolate(double blur_rate) const {
  if (blur_rate <= rows_.front().blur_rate) return rows_.front();
  if (blur_rate >= rows_.back().blur_rate) return rows_.back();
  std::size_t i = 1;
  while (rows_[i].blur_rate < blur_rate) ++i;
  const auto& a = rows_[i - 1];
  const auto& b = rows_[i];
  if (b.blur_rate == blur_rate) return b;
  const double t = (blur_rate - a.blur_rate) / (b.blur_rate - a.blur_rate);
  const auto lerp = [t](double u, double v) { return u + t * (v - u); };
  return {blur_rate, lerp(a.f_e, b.f_e), lerp(a.s_k, b.s_k), lerp(a.s_f, b.s_f)};
}

const CalibrationRow& CalibrationTable::nearest(double blur_rate) const {
  return *std::min_element(rows_.begin(), rows_.end(), [blur_rate](const auto& a, const auto& b) {
    return std::abs(a.blur_rate - blur_rate) < std::abs(b.blur_rate - blur_rate);
  });
}

EnhanceConfig EnhanceConfig::calibrated(double blur_rate) {
  const auto row = CalibrationTable::standard().interpolate(blur_rate);
  EnhanceConfig c;
  c.blur_rate = blur_rate;
  c.f_e = row.f_e;
  c.s_k = row.s_k;
  c.s_f = row.s_f;
  return c;
}

void EnhanceConfig::validate() const {
  if (!(blur_rate >= 0.0)) throw ConfigError("blur_rate must be >= 0");
  if (!kContrastRange.contains(f_e)) throw ConfigError("f_e must lie in [0, 0.4]");
  if (!kAmplitudeScaleRange.contains(s_k)) throw ConfigError("s_k must lie in [0, 45]");
  if (!(s_f > 0.0)) throw ConfigError("s_f must be > 0");
  if (!(a > 0.0 && a < 1.0)) throw ConfigError("a must lie in (0, 1)");
  if (impulses_per_kernel < 1) throw ConfigError("impulses_per_kernel must be >= 1");
  if (!(fovea_radius >= 0.0)) throw ConfigError("fovea_radius must be >= 0");
}

double cutoff_frequency(double sigma_px, double a) {
  if (!(sigma_px > 0.0)) throw ConfigError("cutoff_frequency: sigma must be positive");
  if (!(a > 0.0 && a < 1.0)) throw ConfigError("cutoff_frequency: a must lie in (0, 1)");
  return std::sqrt(-std::log(a) / (std::numbers::pi * sigma_px));
}

double cutoff_level_raw(double sigma_px, double a) {
  if (!(sigma_px > 0.0)) throw ConfigError("cutoff_level: sigma must be positive (no noise inside the fovea)");
  if (!(a > 0.0 && a < 1.0)) throw ConfigError("cutoff_level: a must lie in (0, 1)");
  return std::log2(std::sqrt(-std::numbers::pi * sigma_px / std::log(a))) - 0.5;
}

double cutoff_level(double sigma_px, double a, int depth) {
  return std::clamp(cutoff_level_raw(sigma_px, a), 0.0, static_cast<double>(depth - 1));
}

FieldMap amplitude_field(const Pyramid<float>& laplacian, const FieldMap& sigma_px, double s_k, double a) {
  if (laplacian.kind != PyramidKind::laplacian) throw ConfigError("amplitude_field: need a laplacian pyramid");
  if (dims_of(laplacian[0]) != dims_of(sigma_px)) throw ConfigError("amplitude_field: sigma map size mismatch");
  const int depth = static_cast<int>(laplacian.depth());
  FieldMap k(sigma_px.rows(), sigma_px.cols());
  parallel_rows(k.rows(), [&](std::ptrdiff_t y0, std::ptrdiff_t y1) {
    for (Eigen::Index y = y0; y < y1; ++y) {
      for (Eigen::Index x = 0; x < k.cols(); ++x) {
        const double sigma = sigma_px(y, x);
        if (!(sigma > 0.0)) {
          k(y, x) = 0.0f;
          continue;
        }
        const double level = cutoff_level(sigma, a, depth);
        k(y, x) = static_cast<float>(
            s_k * sample_laplacian_log(laplacian, static_cast<double>(x), static_cast<double>(y), level));
      }
    }
  });
  return k;
}

FieldMap available_range(const FieldMap& base_min, const FieldMap& base_max, int level) {
  if (dims_of(base_min) != dims_of(base_max)) throw ConfigError("available_range: min/max size mismatch");
  const int levels = level + 1;
  const auto mins = build_pyramid(base_min, PyramidKind::min, levels);
  const auto maxs = build_pyramid(base_max, PyramidKind::max, levels);
  const FieldMap& nmin = mins[static_cast<std::size_t>(level)];
  const FieldMap& nmax = maxs[static_cast<std::size_t>(level)];
  FieldMap out(base_min.rows(), base_min.cols());
  for (Eigen::Index y = 0; y < out.rows(); ++y) {
    const Eigen::Index cy = y >> level;
    for (Eigen::Index x = 0; x < out.cols(); ++x) {
      const Eigen::Index cx = x >> level;
      out(y, x) = std::max(0.0f, std::min(1.0f - nmax(cy, cx), nmin(cy, cx)));
    }
  }
  return out;
}

FieldMap attenuate_for_clipping(const FieldMap& amplitude, const FieldMap& base_min, const FieldMap& base_max,
                                int level) {
  if (dims_of(amplitude) != dims_of(base_min)) throw ConfigError("attenuate_for_clipping: size mismatch");
  const FieldMap room = available_range(base_min, base_max, level);
  return amplitude.min(room).max(0.0f);
}

double fold_orientation(double radians) {
  double w = std::fmod(radians, std::numbers::pi);
  if (w < 0.0) w += std::numbers::pi;
  if (w >= std::numbers::pi) w = 0.0;
  return w;
}

FieldMap orientation_field(const Pyramid<float>& gaussian, Dims target) {
  if (gaussian.kind != PyramidKind::gaussian) throw ConfigError("orientation_field: need a gaussian pyramid");
  const std::size_t level = std::min<std::size_t>(kOrientationLevel, gaussian.depth() - 1);
  const FieldMap& g = gaussian[level];
  const Eigen::Index h = g.rows();
  const Eigen::Index w = g.cols();

  FieldMap c2(h, w);
  FieldMap s2(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const auto at = [&](Eigen::Index dy, Eigen::Index dx) {
        return static_cast<double>(g(mirror_index(y + dy, h), mirror_index(x + dx, w)));
      };
      const double gx = (at(-1, 1) + 2.0 * at(0, 1) + at(1, 1)) - (at(-1, -1) + 2.0 * at(0, -1) + at(1, -1));
      const double gy = (at(1, -1) + 2.0 * at(1, 0) + at(1, 1)) - (at(-1, -1) + 2.0 * at(-1, 0) + at(-1, 1));
      const double omega = (gx == 0.0 && gy == 0.0) ? 0.0 : fold_orientation(std::atan2(gy, gx));
      const auto v = encode_orientation(omega);
      c2(y, x) = static_cast<float>(v.c);
      s2(y, x) = static_cast<float>(v.s);
    }
  }

  const FieldMap cu = upsample_bicubic(c2, target);
  const FieldMap su = upsample_bicubic(s2, target);
  FieldMap omega(target.height, target.width);
  for (Eigen::Index y = 0; y < omega.rows(); ++y)
    for (Eigen::Index x = 0; x < omega.cols(); ++x)
      omega(y, x) = static_cast<float>(decode_orientation({cu(y, x), su(y, x)}));
  return omega;
}

FieldMap orientation_field(const FieldMap& luminance) {
  const Eigen::Index smallest = std::min(luminance.rows(), luminance.cols());
  int levels = 1;
  while (levels <= kOrientationLevel && (Eigen::Index{1} << levels) <= smallest) ++levels;
  return orientation_field(build_pyramid(luminance, PyramidKind::gaussian, levels), dims_of(luminance));
}

}  // namespace fovnoise
