#include "fovnoise/analysis.hpp"

#include "fovnoise/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <ostream>

namespace fovnoise {

ComplexField fft2(const Field<double>& img) {
  const Eigen::Index h = img.rows();
  const Eigen::Index w = img.cols();
  ComplexField out(h, w);
  Eigen::FFT<double> fft;
  std::vector<double> row_in(static_cast<std::size_t>(w));
  std::vector<std::complex<double>> row_out;
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) row_in[static_cast<std::size_t>(x)] = img(y, x);
    fft.fwd(row_out, row_in);
    for (Eigen::Index x = 0; x < w; ++x) out(y, x) = row_out[static_cast<std::size_t>(x)];
  }
  std::vector<std::complex<double>> col_in(static_cast<std::size_t>(h));
  std::vector<std::complex<double>> col_out;
  for (Eigen::Index x = 0; x < w; ++x) {
    for (Eigen::Index y = 0; y < h; ++y) col_in[static_cast<std::size_t>(y)] = out(y, x);
    fft.fwd(col_out, col_in);
    for (Eigen::Index y = 0; y < h; ++y) out(y, x) = col_out[static_cast<std::size_t>(y)];
  }
  return out;
}

Field<double> power_spectrum(const Field<double>& img) {
  const double n2 = static_cast<double>(img.size()) * static_cast<double>(img.size());
  return fft2(img).abs2() / n2;
}

std::vector<double> hann_window(Eigen::Index n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    w[static_cast<std::size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n));
  return w;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> ring_patch_origins(const ViewingSetup& setup, Ring ring, int patch) {
  setup.validate();
  if (!(ring.width_deg > 0.0) || !(ring.center_deg >= 0.0)) throw ConfigError("ring: invalid center/width");
  if (patch < 8) throw ConfigError("ring: patch too small");
  std::vector<std::pair<Eigen::Index, Eigen::Index>> origins;
  const Eigen::Index stride = patch / 2;
  const double half = 0.5 * ring.width_deg;
  for (Eigen::Index y0 = 0; y0 + patch <= setup.resolution.height; y0 += stride) {
    for (Eigen::Index x0 = 0; x0 + patch <= setup.resolution.width; x0 += stride) {
      const double cx = static_cast<double>(x0) + 0.5 * (patch - 1);
      const double cy = static_cast<double>(y0) + 0.5 * (patch - 1);
      if (std::abs(setup.eccentricity_at(cx, cy) - ring.center_deg) <= half) origins.emplace_back(x0, y0);
    }
  }
  if (origins.empty()) throw ConfigError("ring: no analysis patch of the ring lies inside the image");
  return origins;
}

namespace {

/// Averages band sums of windowed, mean-removed patch spectra. `bands` may be
/// empty, in which case only the total non-DC power is accumulated.
struct RingAccumulator {
  std::vector<double> band_power;
  double total = 0.0;
  std::size_t patches = 0;
};

RingAccumulator accumulate_ring(const FieldMap& lum, const ViewingSetup& setup, Ring ring, std::span<const Band> bands,
                                int patch) {
  if (dims_of(lum) != setup.resolution) throw ConfigError("ring analysis: image does not match the viewing setup");
  const auto origins = ring_patch_origins(setup, ring, patch);
  const auto window = hann_window(patch);
  RingAccumulator acc;
  acc.band_power.assign(bands.size(), 0.0);
  Field<double> tile(patch, patch);
  for (const auto& [x0, y0] : origins) {
    const double mean = lum.block(y0, x0, patch, patch).cast<double>().mean();
    for (int y = 0; y < patch; ++y)
      for (int x = 0; x < patch; ++x)
        tile(y, x) = (static_cast<double>(lum(y0 + y, x0 + x)) - mean) * window[static_cast<std::size_t>(y)] *
                     window[static_cast<std::size_t>(x)];
    const Field<double> p = power_spectrum(tile);
    const double dpp = setup.deg_per_px_at(static_cast<double>(x0) + 0.5 * (patch - 1),
                                           static_cast<double>(y0) + 0.5 * (patch - 1));
    for (int ky = 0; ky < patch; ++ky) {
      const double fy = bin_frequency(ky, patch);
      for (int kx = 0; kx < patch; ++kx) {
        if (kx == 0 && ky == 0) continue;
        const double fx = bin_frequency(kx, patch);
        const double f_cpd = std::hypot(fx, fy) / dpp;
        const double v = p(ky, kx);
        acc.total += v;
        for (std::size_t b = 0; b < bands.size(); ++b)
          if (f_cpd >= bands[b].f_lo && f_cpd < bands[b].f_hi) acc.band_power[b] += v;
      }
    }
    ++acc.patches;
  }
  const double n = static_cast<double>(acc.patches);
  for (double& v : acc.band_power) v /= n;
  acc.total /= n;
  return acc;
}

}  // namespace

BandReport ring_band_report(const FieldMap& luminance, const ViewingSetup& setup, Ring ring,
                            std::span<const Band> bands, std::string label, int patch) {
  for (std::size_t b = 0; b < bands.size(); ++b) {
    if (!(bands[b].f_lo >= 0.0 && bands[b].f_hi > bands[b].f_lo)) throw ConfigError("band: need 0 <= f_lo < f_hi");
    if (b > 0 && bands[b].f_lo < bands[b - 1].f_hi) throw ConfigError("bands must be ordered and non-overlapping");
  }
  const auto acc = accumulate_ring(luminance, setup, ring, bands, patch);
  BandReport report{std::move(label), ring, acc.patches, {}};
  for (std::size_t b = 0; b < bands.size(); ++b) report.bands.push_back({bands[b], acc.band_power[b]});
  return report;
}

double ring_band_energy(const FieldMap& luminance, const ViewingSetup& setup, Ring ring, Band band, int patch) {
  const Band one[1] = {band};
  return ring_band_report(luminance, setup, ring, one, {}, patch).bands.front().energy;
}

double ring_total_power(const FieldMap& luminance, const ViewingSetup& setup, Ring ring, int patch) {
  return accumulate_ring(luminance, setup, ring, {}, patch).total;
}

std::vector<Band> default_bands(const AcuityLimits& limits, Ring ring) {
  const AcuityBand a = limits.at(ring.center_deg);
  return {{1.0, a.t_low}, {a.t_low, a.t_high}};
}

namespace {

std::vector<double> gaussian_taps(int n, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(n));
  const double c = 0.5 * (n - 1);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = i - c;
    g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += g[static_cast<std::size_t>(i)];
  }
  for (double& v : g) v /= sum;
  return g;
}

/// Valid-region separable filtering.
Field<double> filter_valid(const Field<double>& src, const std::vector<double>& taps) {
  const auto n = static_cast<Eigen::Index>(taps.size());
  const Eigen::Index h = src.rows() - n + 1;
  const Eigen::Index w = src.cols() - n + 1;
  Field<double> tmp(src.rows(), w);
  for (Eigen::Index y = 0; y < src.rows(); ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) acc += taps[static_cast<std::size_t>(k)] * src(y, x + k);
      tmp(y, x) = acc;
    }
  Field<double> out(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) acc += taps[static_cast<std::size_t>(k)] * tmp(y + k, x);
      out(y, x) = acc;
    }
  return out;
}

}  // namespace

double ssim(const FieldMap& a, const FieldMap& b, const SsimParams& params) {
  if (dims_of(a) != dims_of(b)) throw ConfigError("ssim: dimension mismatch");
  if (a.rows() < params.window || a.cols() < params.window) throw ConfigError("ssim: image smaller than window");
  const auto taps = gaussian_taps(params.window, params.sigma);
  const Field<double> x = a.cast<double>();
  const Field<double> y = b.cast<double>();
  const Field<double> mx = filter_valid(x, taps);
  const Field<double> my = filter_valid(y, taps);
  const Field<double> sxx = filter_valid(x * x, taps) - mx * mx;
  const Field<double> syy = filter_valid(y * y, taps) - my * my;
  const Field<double> sxy = filter_valid(x * y, taps) - mx * my;
  const double c1 = std::pow(params.k1 * params.dynamic_range, 2);
  const double c2 = std::pow(params.k2 * params.dynamic_range, 2);
  const Field<double> map =
      ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
  return map.mean();
}

double interframe_ssim(std::span<const FieldMap> frames, const SsimParams& params) {
  if (frames.size() < 2) throw ConfigError("interframe_ssim: need at least two frames");
  double sum = 0.0;
  for (std::size_t i = 1; i < frames.size(); ++i) sum += ssim(frames[i - 1], frames[i], params);
  return sum / static_cast<double>(frames.size() - 1);
}

double sampling_rate_ratio(double blur_rate_1, double blur_rate_2) {
  if (!(blur_rate_1 > 0.0) || !(blur_rate_2 > 0.0)) throw ConfigError("sampling_rate_ratio: blur rates must be positive");
  return blur_rate_1 / blur_rate_2;
}

void write_band_csv(std::ostream& os, std::span<const BandReport> reports) {
  const auto old = os.precision(10);
  os << "condition,ring_center_deg,ring_width_deg,patches,f_lo_cpd,f_hi_cpd,energy\n";
  for (const auto& r : reports)
    for (const auto& b : r.bands)
      os << r.label << ',' << r.ring.center_deg << ',' << r.ring.width_deg << ',' << r.patches << ',' << b.band.f_lo
         << ',' << b.band.f_hi << ',' << b.energy << '\n';
  os.precision(old);
}

void write_ssim_csv(std::ostream& os, std::span<const SsimEntry> entries) {
  const auto old = os.precision(10);
  os << "condition,frames,mean_interframe_ssim\n";
  for (const auto& e : entries) os << e.label << ',' << e.frames << ',' << e.mean_ssim << '\n';
  os.precision(old);
}

}  // namespace fovnoise
