#pragma once

// Viewing geometry and peripheral acuity.
//
// Pixel coordinates refer to pixel centers: pixel (x, y) sits at integer
// coordinates, so a W-wide image spans [-0.5, W - 0.5]. The eye is on the
// screen normal through the gaze point.

#include "fovnoise/errors.hpp"
#include "fovnoise/field.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace fovnoise {

inline constexpr double kDefaultFoveaRadiusDeg = 8.0;
inline constexpr double kDisplayNyquist = 0.5;  // cycles/px

inline constexpr double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }
inline constexpr double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }

struct ViewingSetup {
  Dims resolution;
  double width_m = 0.0;
  double height_m = 0.0;
  double distance_m = 0.0;
  double gaze_x = 0.0;
  double gaze_y = 0.0;

  /// Gaze at the geometric image center.
  static ViewingSetup centered(Dims resolution, double width_m, double height_m, double distance_m) {
    ViewingSetup s{resolution, width_m, height_m, distance_m, 0.0, 0.0};
    s.center_gaze();
    return s;
  }

  /// 55" 16:9 panel at 71.5 cm, 3840x2160, gaze at center.
  static ViewingSetup reference_display() {
    const double diag = 55.0 * 0.0254;
    const double w = diag * 16.0 / std::hypot(16.0, 9.0);
    const double h = diag * 9.0 / std::hypot(16.0, 9.0);
    return centered({3840, 2160}, w, h, 0.715);
  }

  void center_gaze() {
    gaze_x = 0.5 * static_cast<double>(resolution.width - 1);
    gaze_y = 0.5 * static_cast<double>(resolution.height - 1);
  }

  void validate() const {
    if (resolution.width <= 0 || resolution.height <= 0)
      throw ConfigError("viewing setup: resolution must be positive");
    if (!(width_m > 0.0) || !(height_m > 0.0) || !(distance_m > 0.0))
      throw ConfigError("viewing setup: physical size and distance must be positive");
    if (!(gaze_x >= -0.5 && gaze_x <= static_cast<double>(resolution.width) - 0.5 &&
          gaze_y >= -0.5 && gaze_y <= static_cast<double>(resolution.height) - 0.5))
      throw ConfigError("viewing setup: gaze outside image bounds");
  }

  double pitch_x() const { return width_m / static_cast<double>(resolution.width); }
  double pitch_y() const { return height_m / static_cast<double>(resolution.height); }

  /// Distance on the screen plane from the gaze point, meters.
  double screen_radius(double x, double y) const {
    return std::hypot((x - gaze_x) * pitch_x(), (y - gaze_y) * pitch_y());
  }

  /// Visual angle between the gaze ray and the ray through (x, y), degrees.
  double eccentricity_at(double x, double y) const {
    return rad_to_deg(std::atan2(screen_radius(x, y), distance_m));
  }

  /// Local visual angle covered by one pixel along the radial direction:
  /// d(atan(r/D))/dr = D / (D^2 + r^2), times the pixel pitch.
  double deg_per_px_at(double x, double y) const {
    const double r = screen_radius(x, y);
    const double pitch = std::sqrt(pitch_x() * pitch_y());
    return rad_to_deg(pitch * distance_m / (distance_m * distance_m + r * r));
  }

  /// Total horizontal field of view in degrees, edge to edge through the gaze row.
  double horizontal_fov_deg() const {
    const double left = (gaze_x + 0.5) * pitch_x();
    const double right = (static_cast<double>(resolution.width) - 0.5 - gaze_x) * pitch_x();
    return rad_to_deg(std::atan2(left, distance_m) + std::atan2(right, distance_m));
  }
};

template <typename Scalar = float>
Field<Scalar> eccentricity_map(const ViewingSetup& setup) {
  setup.validate();
  Field<Scalar> e(setup.resolution.height, setup.resolution.width);
  for (Eigen::Index y = 0; y < e.rows(); ++y)
    for (Eigen::Index x = 0; x < e.cols(); ++x)
      e(y, x) = static_cast<Scalar>(setup.eccentricity_at(static_cast<double>(x), static_cast<double>(y)));
  return e;
}

template <typename Scalar = float>
Field<Scalar> deg_per_px_map(const ViewingSetup& setup) {
  setup.validate();
  Field<Scalar> d(setup.resolution.height, setup.resolution.width);
  for (Eigen::Index y = 0; y < d.rows(); ++y)
    for (Eigen::Index x = 0; x < d.cols(); ++x)
      d(y, x) = static_cast<Scalar>(setup.deg_per_px_at(static_cast<double>(x), static_cast<double>(y)));
  return d;
}

/// Foveation blur width for a pixel at eccentricity `ecc_deg`, arcmin.
inline double sigma_arcmin(double ecc_deg, double blur_rate, double fovea_radius_deg) {
  return blur_rate * std::max(0.0, ecc_deg - fovea_radius_deg);
}

inline double arcmin_to_px(double arcmin, double deg_per_px) { return arcmin / 60.0 / deg_per_px; }

/// Per-pixel standard deviation of the foveation Gaussian, in pixels. Zero
/// inside the fovea; grows linearly with eccentricity at `blur_rate`
/// arcmin per degree beyond it.
template <typename Scalar = float>
Field<Scalar> sigma_map(const ViewingSetup& setup, double blur_rate,
                        double fovea_radius_deg = kDefaultFoveaRadiusDeg) {
  setup.validate();
  if (!(blur_rate >= 0.0)) throw ConfigError("sigma_map: blur rate must be non-negative");
  if (!(fovea_radius_deg >= 0.0)) throw ConfigError("sigma_map: fovea radius must be non-negative");
  Field<Scalar> s(setup.resolution.height, setup.resolution.width);
  for (Eigen::Index y = 0; y < s.rows(); ++y) {
    for (Eigen::Index x = 0; x < s.cols(); ++x) {
      const double px = static_cast<double>(x);
      const double py = static_cast<double>(y);
      const double arcmin = sigma_arcmin(setup.eccentricity_at(px, py), blur_rate, fovea_radius_deg);
      s(y, x) = static_cast<Scalar>(arcmin > 0.0 ? arcmin_to_px(arcmin, setup.deg_per_px_at(px, py)) : 0.0);
    }
  }
  return s;
}

struct AcuityBand {
  double t_low = 0.0;   // resolution limit, cpd
  double t_high = 0.0;  // detection limit, cpd
};

/// Resolution and detection acuity as a function of eccentricity, linearly
/// interpolated between measured knots and clamped past the last one.
class AcuityLimits {
 public:
  struct Knot {
    double eccentricity;
    double t_low;
    double t_high;
  };

  explicit AcuityLimits(std::vector<Knot> knots) : knots_(std::move(knots)) {
    if (knots_.empty()) throw ConfigError("acuity limits: no knots");
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      const auto& k = knots_[i];
      if (!(k.t_low > 0.0) || !(k.t_low <= k.t_high))
        throw ConfigError("acuity limits: require 0 < t_low <= t_high at every knot");
      if (i > 0 && !(k.eccentricity > knots_[i - 1].eccentricity))
        throw ConfigError("acuity limits: knots must be strictly increasing");
    }
    if (knots_.front().eccentricity != 0.0) throw ConfigError("acuity limits: first knot must be at 0 deg");
  }

  /// Nasal-field resolution/detection thresholds (Thibos et al. 1996).
  static AcuityLimits thibos() {
    return AcuityLimits({{0, 60, 60},
                         {5, 27, 40},
                         {10, 10.5, 26},
                         {15, 8, 24},
                         {20, 5.5, 23},
                         {25, 4.8, 21},
                         {30, 4, 20.5}});
  }

  std::span<const Knot> knots() const { return knots_; }

  AcuityBand at(double ecc_deg) const {
    if (!(ecc_deg >= 0.0)) throw ConfigError("acuity limits: eccentricity must be non-negative");
    if (ecc_deg >= knots_.back().eccentricity) return {knots_.back().t_low, knots_.back().t_high};
    std::size_t i = 1;
    while (knots_[i].eccentricity < ecc_deg) ++i;
    const auto& a = knots_[i - 1];
    const auto& b = knots_[i];
    if (b.eccentricity == ecc_deg) return {b.t_low, b.t_high};
    const double t = (ecc_deg - a.eccentricity) / (b.eccentricity - a.eccentricity);
    return {a.t_low + t * (b.t_low - a.t_low), a.t_high + t * (b.t_high - a.t_high)};
  }

 private:
  std::vector<Knot> knots_;
};

inline AcuityBand thibos_limits(const AcuityLimits& limits, double ecc_deg) { return limits.at(ecc_deg); }

struct NoiseBand {
  double f_low = 0.0;   // cpd
  double f_high = 0.0;  // cpd
  bool empty = true;
};

/// Frequency interval the noise may occupy at one location: above both the
/// resolution limit and the foveation cut-off (3 sigma_f of the blur's
/// transfer function), below both the detection limit and the display limit.
inline NoiseBand noise_band(const AcuityBand& acuity, double sigma_px, double deg_per_px,
                            double f_display = kDisplayNyquist) {
  if (!(acuity.t_low > 0.0) || !(acuity.t_high > 0.0) || !(deg_per_px > 0.0) || !(f_display > 0.0))
    throw ConfigError("noise_band: frequencies and pixel size must be positive");
  NoiseBand band;
  band.f_high = std::min(acuity.t_high, f_display / deg_per_px);
  if (!(sigma_px > 0.0)) {
    band.f_low = std::numeric_limits<double>::infinity();
    band.empty = true;
    return band;
  }
  const double blur_cutoff_cpd = 3.0 / (2.0 * std::numbers::pi * sigma_px) / deg_per_px;
  band.f_low = std::max(acuity.t_low, blur_cutoff_cpd);
  band.empty = band.f_low >= band.f_high;
  return band;
}

}  // namespace fovnoise
