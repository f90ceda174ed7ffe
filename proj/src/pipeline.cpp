#include "fovnoise/pipeline.hpp"

#include "fovnoise/parallel.hpp"
#include "fovnoise/pyramid.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <string>

namespace fovnoise {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

int feasible_levels(Dims d, int wanted) {
  const Eigen::Index smallest = std::min(d.width, d.height);
  int levels = 1;
  while (levels < wanted && (Eigen::Index{1} << levels) <= smallest) ++levels;
  return levels;
}

FieldMap decode(const FieldMap& encoded) {
  return encoded.unaryExpr([](float v) { return static_cast<float>(srgb_to_linear(v)); });
}

}  // namespace

double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) {
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

FieldMap linear_luminance(const std::array<FieldMap, 3>& rgb) {
  FieldMap lum(rgb[0].rows(), rgb[0].cols());
  for (Eigen::Index y = 0; y < lum.rows(); ++y)
    for (Eigen::Index x = 0; x < lum.cols(); ++x)
      lum(y, x) = static_cast<float>(kLuminanceWeights[0] * srgb_to_linear(rgb[0](y, x)) +
                                     kLuminanceWeights[1] * srgb_to_linear(rgb[1](y, x)) +
                                     kLuminanceWeights[2] * srgb_to_linear(rgb[2](y, x)));
  return lum;
}

FieldMap encoded_luma(const Frame& frame) {
  return static_cast<float>(kLuminanceWeights[0]) * frame.channel(0) +
         static_cast<float>(kLuminanceWeights[1]) * frame.channel(1) +
         static_cast<float>(kLuminanceWeights[2]) * frame.channel(2);
}

Frame::Frame(FieldMap r, FieldMap g, FieldMap b) : rgb_{std::move(r), std::move(g), std::move(b)} {
  const Dims d = dims_of(rgb_[0]);
  if (dims_of(rgb_[1]) != d || dims_of(rgb_[2]) != d) throw ConfigError("frame: channel size mismatch");
  for (const auto& c : rgb_)
    if (!all_finite(c) || (c < 0.0f).any() || (c > 1.0f).any())
      throw ConfigError("frame: channel values must be finite and within [0, 1]");
  luminance_ = linear_luminance(rgb_);
}

bool Frame::luminance_consistent() const { return (linear_luminance(rgb_) == luminance_).all(); }

namespace {

/// Fills w[k + r] = exp(-k^2 / (2 s^2)) for |k| <= r using the ratio
/// recurrence w(k+1) / w(k) = q^(2k+1), q = exp(-1 / (2 s^2)).
void gaussian_weights(double s, Eigen::Index r, std::vector<float>& w) {
  w.resize(static_cast<std::size_t>(2 * r + 1));
  const double q = std::exp(-0.5 / (s * s));
  const double q2 = q * q;
  double v = 1.0;
  double ratio = q;
  w[static_cast<std::size_t>(r)] = 1.0f;
  for (Eigen::Index k = 1; k <= r; ++k) {
    v *= ratio;
    ratio *= q2;
    w[static_cast<std::size_t>(r + k)] = w[static_cast<std::size_t>(r - k)] = static_cast<float>(v);
  }
}

/// Row-wise 1-D pass: every output sample uses the kernel of its own sigma;
/// taps outside the row are dropped and the rest renormalized.
template <std::size_t N>
std::array<FieldMap, N> blur_rows(const std::array<const FieldMap*, N>& channels, const FieldMap& sigma) {
  const Dims d = dims_of(sigma);
  std::array<FieldMap, N> out;
  for (auto& o : out) o.resize(d.height, d.width);
  parallel_rows(d.height, [&](std::ptrdiff_t y0, std::ptrdiff_t y1) {
    std::vector<float> weights;
    for (Eigen::Index y = y0; y < y1; ++y) {
      for (Eigen::Index x = 0; x < d.width; ++x) {
        const double s = sigma(y, x);
        if (!(s > 0.0)) {
          for (std::size_t c = 0; c < N; ++c) out[c](y, x) = (*channels[c])(y, x);
          continue;
        }
        const auto r = static_cast<Eigen::Index>(std::ceil(3.0 * s));
        gaussian_weights(s, r, weights);
        const Eigen::Index xa = std::max<Eigen::Index>(0, x - r);
        const Eigen::Index xb = std::min<Eigen::Index>(d.width - 1, x + r);
        const Eigen::Map<const Eigen::VectorXf> w(weights.data() + (xa - x + r), xb - xa + 1);
        const double norm = w.cast<double>().sum();
        for (std::size_t c = 0; c < N; ++c)
          out[c](y, x) = static_cast<float>(
              static_cast<double>(Eigen::Map<const Eigen::VectorXf>(&(*channels[c])(y, xa), xb - xa + 1).dot(w)) /
              norm);
      }
    }
  });
  return out;
}

}  // namespace

template <std::size_t N>
std::array<FieldMap, N> gaussian_blur_variable(const std::array<const FieldMap*, N>& channels, const FieldMap& sigma,
                                               BlurMethod method) {
  const Dims d = dims_of(sigma);
  for (const FieldMap* c : channels)
    if (dims_of(*c) != d) throw ConfigError("gaussian_blur_variable: size mismatch");
  if (method == BlurMethod::separable) {
    auto rows = blur_rows<N>(channels, sigma);
    std::array<FieldMap, N> transposed;
    std::array<const FieldMap*, N> ptrs;
    for (std::size_t c = 0; c < N; ++c) {
      transposed[c] = rows[c].transpose();
      ptrs[c] = &transposed[c];
    }
    const FieldMap sigma_t = sigma.transpose();
    auto cols = blur_rows<N>(ptrs, sigma_t);
    for (std::size_t c = 0; c < N; ++c) rows[c] = cols[c].transpose();
    return rows;
  }
  std::array<FieldMap, N> out;
  for (auto& o : out) o.resize(d.height, d.width);

  parallel_rows(d.height, [&](std::ptrdiff_t y0, std::ptrdiff_t y1) {
    std::vector<float> weights;
    for (Eigen::Index y = y0; y < y1; ++y) {
      for (Eigen::Index x = 0; x < d.width; ++x) {
        const double s = sigma(y, x);
        if (!(s > 0.0)) {
          for (std::size_t c = 0; c < N; ++c) out[c](y, x) = (*channels[c])(y, x);
          continue;
        }
        const auto r = static_cast<Eigen::Index>(std::ceil(3.0 * s));
        gaussian_weights(s, r, weights);

        const Eigen::Index xa = std::max<Eigen::Index>(0, x - r);
        const Eigen::Index xb = std::min<Eigen::Index>(d.width - 1, x + r);
        const Eigen::Index ya = std::max<Eigen::Index>(0, y - r);
        const Eigen::Index yb = std::min<Eigen::Index>(d.height - 1, y + r);
        const Eigen::Index n = xb - xa + 1;
        const Eigen::Map<const Eigen::VectorXf> wx(weights.data() + (xa - x + r), n);
        const double wx_sum = wx.cast<double>().sum();

        std::array<double, N> acc{};
        double norm = 0.0;
        for (Eigen::Index yy = ya; yy <= yb; ++yy) {
          const double wy = weights[static_cast<std::size_t>(yy - y + r)];
          norm += wy * wx_sum;
          for (std::size_t c = 0; c < N; ++c)
            acc[c] += wy * static_cast<double>(Eigen::Map<const Eigen::VectorXf>(&(*channels[c])(yy, xa), n).dot(wx));
        }
        for (std::size_t c = 0; c < N; ++c) out[c](y, x) = static_cast<float>(acc[c] / norm);
      }
    }
  });
  return out;
}

template std::array<FieldMap, 1> gaussian_blur_variable<1>(const std::array<const FieldMap*, 1>&, const FieldMap&,
                                                           BlurMethod);
template std::array<FieldMap, 3> gaussian_blur_variable<3>(const std::array<const FieldMap*, 3>&, const FieldMap&,
                                                           BlurMethod);

FieldMap gaussian_blur_variable(const FieldMap& src, const FieldMap& sigma, BlurMethod method) {
  auto out = gaussian_blur_variable<1>({&src}, sigma, method);
  return std::move(out[0]);
}

Frame foveate(const Frame& frame, const FieldMap& sigma_px, BlurMethod method) {
  if (frame.dims() != dims_of(sigma_px)) throw ConfigError("foveate: sigma map size mismatch");
  if (!(sigma_px > 0.0f).any()) return frame;
  const std::array<FieldMap, 3> lin{decode(frame.channel(0)), decode(frame.channel(1)), decode(frame.channel(2))};
  auto blurred = gaussian_blur_variable<3>({&lin[0], &lin[1], &lin[2]}, sigma_px, method);
  for (std::size_t c = 0; c < 3; ++c) {
    const FieldMap& src = frame.channel(static_cast<int>(c));
    FieldMap& dst = blurred[c];
    for (Eigen::Index y = 0; y < dst.rows(); ++y)
      for (Eigen::Index x = 0; x < dst.cols(); ++x)
        dst(y, x) = sigma_px(y, x) > 0.0f
                        ? static_cast<float>(std::clamp(linear_to_srgb(std::clamp(double(dst(y, x)), 0.0, 1.0)), 0.0, 1.0))
                        : src(y, x);
  }
  return Frame(std::move(blurred[0]), std::move(blurred[1]), std::move(blurred[2]));
}

Frame contrast_enhance(const Frame& frame, const FieldMap& sigma_px, double f_e, BlurMethod method) {
  if (!kContrastRange.contains(f_e)) throw ConfigError("contrast_enhance: f_e must lie in [0, 0.4]");
  if (frame.dims() != dims_of(sigma_px)) throw ConfigError("contrast_enhance: sigma map size mismatch");
  if (f_e == 0.0 || !(sigma_px > 0.0f).any()) return frame;

  const FieldMap& lum = frame.luminance();
  const FieldMap blurred = gaussian_blur_variable(lum, sigma_px, method);
  const double gain = kContrastNormalizer * f_e;

  std::array<FieldMap, 3> out = frame.channels();
  for (Eigen::Index y = 0; y < lum.rows(); ++y) {
    for (Eigen::Index x = 0; x < lum.cols(); ++x) {
      const double l = lum(y, x);
      if (!(sigma_px(y, x) > 0.0f) || l < 1e-6) continue;
      const double enhanced = l + gain * (l - static_cast<double>(blurred(y, x)));
      const double ratio = enhanced / l;
      if (ratio == 1.0) continue;
      for (std::size_t c = 0; c < 3; ++c) {
        const double lin = std::clamp(srgb_to_linear(frame.channel(static_cast<int>(c))(y, x)) * ratio, 0.0, 1.0);
        out[c](y, x) = static_cast<float>(std::clamp(linear_to_srgb(lin), 0.0, 1.0));
      }
    }
  }
  return Frame(std::move(out[0]), std::move(out[1]), std::move(out[2]));
}

ClippingError::ClippingError(double fraction, double limit)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "clipped-pixel fraction " << fraction << " exceeds limit " << limit;
        return os.str();
      }()),
      fraction_(fraction) {}

FoveationGeometry FoveationGeometry::compute(const ViewingSetup& setup, const FieldMap& sigma_px,
                                             const AcuityLimits& limits) {
  setup.validate();
  if (dims_of(sigma_px) != setup.resolution) throw ConfigError("foveation geometry: sigma map size mismatch");
  if (!all_finite(sigma_px) || (sigma_px < 0.0f).any())
    throw ConfigError("foveation geometry: sigma map must be finite and non-negative");
  FoveationGeometry g;
  g.eccentricity = eccentricity_map<float>(setup);
  g.deg_per_px = deg_per_px_map<float>(setup);
  g.sigma_px = sigma_px;
  g.f_low = FieldMap::Zero(sigma_px.rows(), sigma_px.cols());
  g.f_high = FieldMap::Zero(sigma_px.rows(), sigma_px.cols());
  for (Eigen::Index y = 0; y < sigma_px.rows(); ++y) {
    for (Eigen::Index x = 0; x < sigma_px.cols(); ++x) {
      const double s = sigma_px(y, x);
      if (!(s > 0.0)) continue;
      const double e = setup.eccentricity_at(static_cast<double>(x), static_cast<double>(y));
      const double dpp = setup.deg_per_px_at(static_cast<double>(x), static_cast<double>(y));
      const NoiseBand band = noise_band(limits.at(e), s, dpp);
      if (band.empty) continue;
      g.f_low(y, x) = static_cast<float>(band.f_low);
      g.f_high(y, x) = static_cast<float>(band.f_high);
    }
  }
  return g;
}

Enhancer::Enhancer(ViewingSetup setup, EnhanceConfig config, EnhanceOptions options, const AcuityLimits& limits)
    : Enhancer(setup, config, [&] {
        config.validate();
        return sigma_map<float>(setup, config.blur_rate, config.fovea_radius);
      }(), options, limits) {}

Enhancer::Enhancer(ViewingSetup setup, EnhanceConfig config, FieldMap sigma_px, EnhanceOptions options,
                   const AcuityLimits& limits)
    : setup_(setup), config_(config), options_(options) {
  config_.validate();
  setup_.validate();
  if (options_.laplacian_levels < 1) throw ConfigError("enhancer: laplacian_levels must be >= 1");
  geometry_ = FoveationGeometry::compute(setup_, sigma_px, limits);
  impulses_ = generate_impulses(grid(), setup_.resolution);
}

GaborGrid Enhancer::grid() const {
  GaborGrid g;
  g.impulses_per_kernel = config_.impulses_per_kernel;
  g.seed = config_.seed;
  return g;
}

NoiseEstimate Enhancer::estimate(const Frame& foveated, const Frame& contrast) const {
  if (foveated.dims() != setup_.resolution || contrast.dims() != setup_.resolution)
    throw ConfigError("enhancer: frame size does not match the viewing setup");
  const FieldMap& lum = foveated.luminance();
  const int levels = feasible_levels(foveated.dims(), std::max(options_.laplacian_levels, kOrientationLevel + 1));
  const auto gauss = build_pyramid(lum, PyramidKind::gaussian, levels);
  auto lap = laplacian_from_gaussian(gauss);
  if (static_cast<int>(lap.depth()) > options_.laplacian_levels) {
    // Fold the extra coarse levels back so the amplitude pyramid has the requested depth.
    const auto keep = static_cast<std::size_t>(options_.laplacian_levels);
    lap.levels.resize(keep);
    lap.levels.back() = gauss[keep - 1];
  }

  NoiseEstimate est;
  est.amplitude_raw = amplitude_field(lap, geometry_.sigma_px, config_.s_k, config_.a);
  est.orientation = orientation_field(gauss, foveated.dims());

  const auto& ch = contrast.channels();
  const FieldMap lo = ch[0].min(ch[1]).min(ch[2]);
  const FieldMap hi = ch[0].max(ch[1]).max(ch[2]);
  const int clip_level = std::min(kClippingLevel, feasible_levels(foveated.dims(), kClippingLevel + 1) - 1);
  est.amplitude = attenuate_for_clipping(est.amplitude_raw, lo, hi, clip_level);
  return est;
}

FieldMap Enhancer::synthesize_noise(const NoiseEstimate& est) const {
  const NoiseFields fields{geometry_.f_low, geometry_.f_high, geometry_.deg_per_px, est.amplitude, est.orientation,
                           config_.s_f};
  return synthesize(impulses_, fields);
}

EnhanceResult Enhancer::run(const Frame& foveated) const {
  if (foveated.dims() != setup_.resolution) throw ConfigError("enhancer: frame size does not match the viewing setup");
  EnhanceResult result;

  auto t0 = Clock::now();
  result.contrast = contrast_enhance(foveated, geometry_.sigma_px, config_.f_e, options_.blur);
  result.timings.contrast_ms = ms_since(t0);

  t0 = Clock::now();
  result.estimate = estimate(foveated, result.contrast);
  result.timings.estimation_ms = ms_since(t0);

  t0 = Clock::now();
  if (config_.s_k > 0.0)
    result.noise = synthesize_noise(result.estimate);
  else
    result.noise = FieldMap::Zero(foveated.dims().height, foveated.dims().width);
  result.timings.synthesis_ms = ms_since(t0);

  t0 = Clock::now();
  std::array<FieldMap, 3> out = result.contrast.channels();
  std::size_t clipped = 0;
  const FieldMap& sigma = geometry_.sigma_px;
  for (Eigen::Index y = 0; y < sigma.rows(); ++y) {
    for (Eigen::Index x = 0; x < sigma.cols(); ++x) {
      if (!(sigma(y, x) > 0.0f)) {
        for (std::size_t c = 0; c < 3; ++c) out[c](y, x) = foveated.channel(static_cast<int>(c))(y, x);
        continue;
      }
      const float n = result.noise(y, x);
      if (n == 0.0f) continue;
      bool clip = false;
      for (auto& ch : out) {
        const float v = ch(y, x) + n;
        clip = clip || v < 0.0f || v > 1.0f;
        ch(y, x) = std::clamp(v, 0.0f, 1.0f);
      }
      clipped += clip ? 1 : 0;
    }
  }
  result.output = Frame(std::move(out[0]), std::move(out[1]), std::move(out[2]));
  result.clipped_fraction = static_cast<double>(clipped) / static_cast<double>(sigma.size());
  result.timings.composite_ms = ms_since(t0);

  if (result.clipped_fraction > options_.max_clipped_fraction)
    throw ClippingError(result.clipped_fraction, options_.max_clipped_fraction);
  return result;
}

Frame enhance(const Frame& foveated, const ViewingSetup& setup, const EnhanceConfig& config) {
  return Enhancer(setup, config).run(foveated).output;
}

std::vector<Frame> process_sequence(const SequenceJob& job, EnhanceOptions options) {
  const Enhancer enhancer(job.setup, job.config, options);
  std::vector<Frame> out;
  out.reserve(job.frames.size());
  for (const Frame& f : job.frames) out.push_back(enhancer.run(f).output);
  return out;
}

}  // namespace fovnoise
