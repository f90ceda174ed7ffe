#pragma once

// End-to-end enhancement of a foveated frame: contrast enhancement, noise
// parameter estimation, Gabor noise synthesis and display-space compositing.

#include "fovnoise/field.hpp"
#include "fovnoise/gabor.hpp"
#include "fovnoise/noise_params.hpp"
#include "fovnoise/retina.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

namespace fovnoise {

inline constexpr std::array<double, 3> kLuminanceWeights{0.2126, 0.7152, 0.0722};

/// sRGB transfer function.
double srgb_to_linear(double encoded);
double linear_to_srgb(double linear);

/// Display-encoded RGB frame with a cached linear luminance plane.
class Frame {
 public:
  Frame() = default;
  /// Channels are display-encoded values in [0, 1].
  Frame(FieldMap r, FieldMap g, FieldMap b);
  static Frame gray(const FieldMap& encoded) { return Frame(encoded, encoded, encoded); }

  const FieldMap& channel(int c) const { return rgb_.at(static_cast<std::size_t>(c)); }
  const std::array<FieldMap, 3>& channels() const { return rgb_; }
  /// Linear luminance (0.2126, 0.7152, 0.0722 on decoded channels).
  const FieldMap& luminance() const { return luminance_; }
  Dims dims() const { return dims_of(luminance_); }
  bool luminance_consistent() const;

  friend bool operator==(const Frame& a, const Frame& b) {
    return (a.rgb_[0] == b.rgb_[0]).all() && (a.rgb_[1] == b.rgb_[1]).all() && (a.rgb_[2] == b.rgb_[2]).all();
  }

 private:
  std::array<FieldMap, 3> rgb_;
  FieldMap luminance_;
};

FieldMap linear_luminance(const std::array<FieldMap, 3>& encoded_rgb);
/// Luma of the display-encoded channels, same weights; what the analyses measure.
FieldMap encoded_luma(const Frame& frame);

enum class BlurMethod {
  exact,      // per-pixel 2-D kernel
  separable,  // row pass then column pass, each with the local sigma; approximate
};

/// Spatially varying Gaussian: each output pixel is the normalized weighted
/// mean of in-image taps within ceil(3 sigma) of it. Pixels with sigma <= 0
/// are copied.
template <std::size_t N>
std::array<FieldMap, N> gaussian_blur_variable(const std::array<const FieldMap*, N>& channels, const FieldMap& sigma,
                                               BlurMethod method = BlurMethod::exact);
FieldMap gaussian_blur_variable(const FieldMap& src, const FieldMap& sigma, BlurMethod method = BlurMethod::exact);

/// Simulated foveation: per-pixel Gaussian in linear RGB.
Frame foveate(const Frame& frame, const FieldMap& sigma_px, BlurMethod method = BlurMethod::exact);

inline constexpr double kContrastNormalizer = 5.0;

/// Unsharp masking of linear luminance with the foveation-matched blur:
/// lum' = lum + 5 f_e (lum - blur(lum)); RGB scaled by lum'/lum.
Frame contrast_enhance(const Frame& frame, const FieldMap& sigma_px, double f_e,
                       BlurMethod method = BlurMethod::exact);

/// Composited noise pushed more than this fraction of pixels out of range.
class ClippingError : public std::runtime_error {
 public:
  ClippingError(double fraction, double limit);
  double fraction() const { return fraction_; }

 private:
  double fraction_;
};

struct StageTimings {
  double contrast_ms = 0.0;
  double estimation_ms = 0.0;
  double synthesis_ms = 0.0;
  double composite_ms = 0.0;
};

/// Per-pixel parameter fields produced by estimation.
struct NoiseEstimate {
  FieldMap amplitude_raw;
  FieldMap amplitude;  // after clipping attenuation
  FieldMap orientation;
};

struct EnhanceResult {
  Frame output;
  Frame contrast;
  FieldMap noise;
  NoiseEstimate estimate;
  double clipped_fraction = 0.0;
  StageTimings timings;
};

struct EnhanceOptions {
  double max_clipped_fraction = 0.05;
  int laplacian_levels = 6;
  BlurMethod blur = BlurMethod::exact;  // for contrast enhancement
};

/// Geometry-dependent fields shared by every frame of a viewing setup.
struct FoveationGeometry {
  FieldMap eccentricity;  // degrees
  FieldMap deg_per_px;
  FieldMap sigma_px;
  FieldMap f_low;   // cpd; 0 where the band is empty
  FieldMap f_high;  // cpd; 0 where the band is empty

  static FoveationGeometry compute(const ViewingSetup& setup, const FieldMap& sigma_px,
                                   const AcuityLimits& limits = AcuityLimits::thibos());
};

/// Configured enhancement; immutable and shareable once built. The impulse
/// set is generated once so every frame uses identical impulse positions.
class Enhancer {
 public:
  Enhancer(ViewingSetup setup, EnhanceConfig config, EnhanceOptions options = {},
           const AcuityLimits& limits = AcuityLimits::thibos());
  /// Uses an externally supplied sigma map (pixels) instead of the simulated one.
  Enhancer(ViewingSetup setup, EnhanceConfig config, FieldMap sigma_px, EnhanceOptions options = {},
           const AcuityLimits& limits = AcuityLimits::thibos());

  const ViewingSetup& setup() const { return setup_; }
  const EnhanceConfig& config() const { return config_; }
  const FoveationGeometry& geometry() const { return geometry_; }
  const ImpulseSet& impulses() const { return impulses_; }
  GaborGrid grid() const;

  /// Throws ClippingError when the clipped fraction exceeds the option limit.
  EnhanceResult run(const Frame& foveated) const;

  /// Parameter estimation alone: amplitude (attenuated against `contrast`) and orientation.
  NoiseEstimate estimate(const Frame& foveated, const Frame& contrast) const;
  FieldMap synthesize_noise(const NoiseEstimate& estimate) const;

 private:
  ViewingSetup setup_;
  EnhanceConfig config_;
  EnhanceOptions options_;
  FoveationGeometry geometry_;
  ImpulseSet impulses_;
};

Frame enhance(const Frame& foveated, const ViewingSetup& setup, const EnhanceConfig& config);

struct SequenceJob {
  std::vector<Frame> frames;
  EnhanceConfig config;
  ViewingSetup setup;
};

std::vector<Frame> process_sequence(const SequenceJob& job, EnhanceOptions options = {});

}  // namespace fovnoise
