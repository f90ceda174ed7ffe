#pragma once

// Per-location Gabor noise parameters: frequency distribution, amplitude with
// clipping attenuation, and orientation.

#include "fovnoise/errors.hpp"
#include "fovnoise/field.hpp"
#include "fovnoise/pyramid.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace fovnoise {

/// Log-normal frequency distribution truncated above at f_high.
struct FrequencySpec {
  double mu_n = 0.0;     // ln(cpd)
  double sigma_n = 0.0;  // ln units
  double f_high = 0.0;   // truncation bound, same unit as the limits
  bool empty = true;
};

/// Builds the distribution for a band [f_low, f_high]. The band is empty only
/// when f_low > f_high; equal limits give a degenerate spec (sigma_n = 0).
FrequencySpec frequency_spec(double f_low, double f_high, double s_f);

inline constexpr int kMaxFrequencyRejections = 64;

/// Draws from the truncated log-normal by rejection. Deterministic for a
/// given generator state.
template <typename Rng>
double sample_frequency(const FrequencySpec& spec, Rng& rng) {
  if (spec.empty) throw ConfigError("sample_frequency: empty frequency spec");
  const double below = std::nextafter(spec.f_high, 0.0);
  const double centre = std::exp(spec.mu_n);
  if (spec.sigma_n == 0.0) return std::min(centre, below);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < kMaxFrequencyRejections; ++i) {
    const double f = std::exp(spec.mu_n + spec.sigma_n * normal(rng));
    if (f > 0.0 && f < spec.f_high) return f;
  }
  return std::min(centre, below);
}

/// One row of the calibrated constants: contrast gain f_e, amplitude scale s_k
/// and bandwidth scale s_f at a given blur rate (arcmin/deg).
struct CalibrationRow {
  double blur_rate;
  double f_e;
  double s_k;
  double s_f;
};

/// Calibrated constants over blur rate; linear in blur rate between rows,
/// clamped outside the table.
class CalibrationTable {
 public:
  explicit CalibrationTable(std::vector<CalibrationRow> rows);
  static const CalibrationTable& standard();

  const std::vector<CalibrationRow>& rows() const { return rows_; }
  CalibrationRow interpolate(double blur_rate) const;
  const CalibrationRow& nearest(double blur_rate) const;

 private:
  std::vector<CalibrationRow> rows_;
};

struct ParamRange {
  double lo;
  double hi;
  double clamp(double v) const { return std::clamp(v, lo, hi); }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

inline constexpr ParamRange kContrastRange{0.0, 0.4};
inline constexpr ParamRange kAmplitudeScaleRange{0.0, 45.0};
inline constexpr ParamRange kBandwidthScaleRange{0.01, 10.0};
inline constexpr ParamRange kBlurRateRange{0.0, 2.0};

struct EnhanceConfig {
  double blur_rate = 0.34;  // arcmin per degree beyond the fovea
  double f_e = 0.23;
  double s_k = 21.02;
  double s_f = 2.21;
  double a = 0.25;  // attenuation cut-off for the amplitude level
  int impulses_per_kernel = 12;
  std::uint64_t seed = 0;
  double fovea_radius = 8.0;  // degrees

  /// Constants interpolated from the calibration table at `blur_rate`.
  static EnhanceConfig calibrated(double blur_rate);

  void validate() const;

  friend bool operator==(const EnhanceConfig&, const EnhanceConfig&) = default;
};

/// Unclamped Laplacian level whose central frequency equals the foveation
/// cut-off sqrt(-ln a / (pi sigma)).
double cutoff_level_raw(double sigma_px, double a);

/// Foveation cut-off frequency in cycles/px for attenuation factor a.
double cutoff_frequency(double sigma_px, double a);

/// cutoff_level_raw clamped to [0, depth - 1].
double cutoff_level(double sigma_px, double a, int depth);

/// K = s_k * |L| at the cut-off level, zero where sigma is zero.
FieldMap amplitude_field(const Pyramid<float>& laplacian, const FieldMap& sigma_px, double s_k, double a);

inline constexpr int kClippingLevel = 3;

/// Headroom min(1 - N_max, N_min) from the min/max pyramids at `level`,
/// read from the cell covering each level-0 pixel. `base_min`/`base_max`
/// are per-pixel channel minima/maxima of the image the noise is added to.
FieldMap available_range(const FieldMap& base_min, const FieldMap& base_max, int level = kClippingLevel);

/// min(K, available), never negative.
FieldMap attenuate_for_clipping(const FieldMap& amplitude, const FieldMap& base_min, const FieldMap& base_max,
                                int level = kClippingLevel);
inline FieldMap attenuate_for_clipping(const FieldMap& amplitude, const FieldMap& base, int level = kClippingLevel) {
  return attenuate_for_clipping(amplitude, base, base, level);
}

inline constexpr int kOrientationLevel = 3;

/// Folds an angle to [0, pi).
double fold_orientation(double radians);

struct DoubleAngle {
  double c;
  double s;
};
inline DoubleAngle encode_orientation(double omega) { return {std::cos(2.0 * omega), std::sin(2.0 * omega)}; }
inline double decode_orientation(DoubleAngle v) {
  if (v.c == 0.0 && v.s == 0.0) return 0.0;
  return fold_orientation(0.5 * std::atan2(v.s, v.c));
}

/// Gradient orientation from Sobel on Gaussian level kOrientationLevel,
/// brought back to `target` resolution by bicubic interpolation of the
/// double-angle vector field. Zero-gradient cells get 0.
FieldMap orientation_field(const Pyramid<float>& gaussian, Dims target);
FieldMap orientation_field(const FieldMap& luminance);

}  // namespace fovnoise
