#include "fovnoise/synthetic.hpp"

#include "fovnoise/errors.hpp"
#include "fovnoise/gabor.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

namespace fovnoise {

namespace {

using Complex = std::complex<double>;
using ComplexGrid = Eigen::Array<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void inverse_fft2(ComplexGrid& g) {
  Eigen::FFT<double> fft;
  std::vector<Complex> in;
  std::vector<Complex> out;
  in.resize(static_cast<std::size_t>(g.cols()));
  for (Eigen::Index y = 0; y < g.rows(); ++y) {
    for (Eigen::Index x = 0; x < g.cols(); ++x) in[static_cast<std::size_t>(x)] = g(y, x);
    fft.inv(out, in);
    for (Eigen::Index x = 0; x < g.cols(); ++x) g(y, x) = out[static_cast<std::size_t>(x)];
  }
  in.resize(static_cast<std::size_t>(g.rows()));
  for (Eigen::Index x = 0; x < g.cols(); ++x) {
    for (Eigen::Index y = 0; y < g.rows(); ++y) in[static_cast<std::size_t>(y)] = g(y, x);
    fft.inv(out, in);
    for (Eigen::Index y = 0; y < g.rows(); ++y) g(y, x) = out[static_cast<std::size_t>(y)];
  }
}

double signed_freq(Eigen::Index k, Eigen::Index n) {
  return static_cast<double>(k <= n / 2 ? k : k - n) / static_cast<double>(n);
}

}  // namespace

FieldMap pink_noise(Dims size, std::uint64_t seed, double slope) {
  if (size.width < 2 || size.height < 2) throw ConfigError("pink_noise: size too small");
  SplitMix64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexGrid g(size.height, size.width);
  for (Eigen::Index y = 0; y < g.rows(); ++y) {
    const double fy = signed_freq(y, g.rows());
    for (Eigen::Index x = 0; x < g.cols(); ++x) {
      const double f = std::hypot(signed_freq(x, g.cols()), fy);
      const double amp = f > 0.0 ? std::abs(gauss(rng)) / std::pow(f, slope) : 0.0;
      g(y, x) = std::polar(amp, phase(rng));
    }
  }
  inverse_fft2(g);
  FieldMap out = g.real().cast<float>();
  const float mean = out.mean();
  out -= mean;
  const float sd = std::sqrt(out.square().mean());
  if (sd > 0.0f) out /= sd;
  return out;
}

Frame synthetic_image(Dims size, std::uint64_t seed, const TextureParams& p) {
  const FieldMap base = pink_noise(size, SplitMix64::finalize(seed ^ 0x1ULL), p.slope);
  const FieldMap tint_a = pink_noise(size, SplitMix64::finalize(seed ^ 0x2ULL), p.slope);
  const FieldMap tint_b = pink_noise(size, SplitMix64::finalize(seed ^ 0x3ULL), p.slope);
  FieldMap lum = static_cast<float>(p.mean) + static_cast<float>(p.stddev) * base;

  SplitMix64 rng(SplitMix64::finalize(seed ^ 0x4ULL));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double w = static_cast<double>(size.width);
  const double h = static_cast<double>(size.height);
  const double scale = std::min(w, h);
  for (int s = 0; s < p.shapes; ++s) {
    const double cx = u(rng) * w;
    const double cy = u(rng) * h;
    const double r = (0.02 + 0.08 * u(rng)) * scale;
    const bool disc = u(rng) < 0.5;
    const float delta = static_cast<float>(p.shape_contrast * (u(rng) < 0.5 ? -1.0 : 1.0));
    const auto x0 = static_cast<Eigen::Index>(std::max(0.0, std::floor(cx - r)));
    const auto x1 = static_cast<Eigen::Index>(std::min(w - 1.0, std::ceil(cx + r)));
    const auto y0 = static_cast<Eigen::Index>(std::max(0.0, std::floor(cy - r)));
    const auto y1 = static_cast<Eigen::Index>(std::min(h - 1.0, std::ceil(cy + r)));
    for (Eigen::Index y = y0; y <= y1; ++y)
      for (Eigen::Index x = x0; x <= x1; ++x)
        if (!disc || std::hypot(static_cast<double>(x) - cx, static_cast<double>(y) - cy) <= r) lum(y, x) += delta;
  }

  const auto sat = static_cast<float>(p.saturation * p.stddev);
  auto finish = [](FieldMap f) { return FieldMap(f.max(0.0f).min(1.0f)); };
  return Frame(finish(lum + sat * tint_a), finish(lum - 0.5f * sat * (tint_a - tint_b)), finish(lum - sat * tint_b));
}

std::vector<Frame> panning_crops(const Frame& source, Dims size, int count, int step_x, int step_y) {
  const Dims src = source.dims();
  if (count < 1) throw ConfigError("panning_crops: count must be positive");
  const Eigen::Index span_x = size.width + static_cast<Eigen::Index>(std::abs(step_x)) * (count - 1);
  const Eigen::Index span_y = size.height + static_cast<Eigen::Index>(std::abs(step_y)) * (count - 1);
  if (span_x > src.width || span_y > src.height) throw ConfigError("panning_crops: source too small for the pan");
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const Eigen::Index ox = step_x >= 0 ? Eigen::Index{step_x} * i : span_x - size.width + Eigen::Index{step_x} * i;
    const Eigen::Index oy = step_y >= 0 ? Eigen::Index{step_y} * i : span_y - size.height + Eigen::Index{step_y} * i;
    auto crop = [&](int c) { return FieldMap(source.channel(c).block(oy, ox, size.height, size.width)); };
    frames.emplace_back(crop(0), crop(1), crop(2));
  }
  return frames;
}

}  // namespace fovnoise
