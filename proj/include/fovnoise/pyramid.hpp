#pragma once

// Gaussian, Laplacian, min and max image pyramids with the resampling helpers
// the parameter estimators need. Level l has dimensions ceil(w / 2^l) x
// ceil(h / 2^l); a level-l sample at (x, y) covers level-0 pixel centers
// around ((x + 0.5) * 2^l - 0.5, (y + 0.5) * 2^l - 0.5).

#include "fovnoise/errors.hpp"
#include "fovnoise/field.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace fovnoise {

enum class PyramidKind { gaussian, laplacian, min, max };

template <typename Scalar>
struct Pyramid {
  PyramidKind kind = PyramidKind::gaussian;
  std::vector<Field<Scalar>> levels;

  std::size_t depth() const { return levels.size(); }
  const Field<Scalar>& operator[](std::size_t l) const { return levels.at(l); }
};

inline Dims level_dims(Dims base, int level) {
  const Eigen::Index scale = Eigen::Index{1} << level;
  return {(base.width + scale - 1) / scale, (base.height + scale - 1) / scale};
}

/// Central frequency (cycles/px) carried by Laplacian level l: the log-domain
/// midpoint of the band's cut-offs 2^-l and 2^-(l+1).
inline double level_to_frequency(double level) { return std::exp2(-(level + 0.5)); }
inline double frequency_to_level(double cycles_per_px) { return -std::log2(cycles_per_px) - 0.5; }

namespace detail {

inline constexpr std::array<double, 5> kBinomial5{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

template <typename Scalar>
Field<Scalar> blur_binomial_rows(const Field<Scalar>& src) {
  Field<Scalar> out(src.rows(), src.cols());
  const auto w = src.cols();
  for (Eigen::Index y = 0; y < src.rows(); ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) acc += kBinomial5[k + 2] * src(y, mirror_index(x + k, w));
      out(y, x) = static_cast<Scalar>(acc);
    }
  }
  return out;
}

template <typename Scalar>
Field<Scalar> blur_binomial_cols(const Field<Scalar>& src) {
  Field<Scalar> out(src.rows(), src.cols());
  const auto h = src.rows();
  for (Eigen::Index y = 0; y < h; ++y) {
    const Eigen::Index r[5] = {mirror_index(y - 2, h), mirror_index(y - 1, h), y, mirror_index(y + 1, h),
                               mirror_index(y + 2, h)};
    for (Eigen::Index x = 0; x < src.cols(); ++x) {
      double acc = 0.0;
      for (int k = 0; k < 5; ++k) acc += kBinomial5[k] * src(r[k], x);
      out(y, x) = static_cast<Scalar>(acc);
    }
  }
  return out;
}

/// 1-D expansion of `coarse` (length m) to length n along a lambda accessor.
/// Even outputs take [1 6 1]/8 of the coarse neighbors, odd outputs [1 1]/2.
template <typename Get>
double expand_tap(Eigen::Index i, Eigen::Index m, Get&& get) {
  const Eigen::Index c = i / 2;
  if ((i & 1) == 0)
    return (get(mirror_index(c - 1, m)) + 6.0 * get(c) + get(mirror_index(c + 1, m))) / 8.0;
  return 0.5 * (get(c) + get(mirror_index(c + 1, m)));
}

}  // namespace detail

/// Separable 5-tap binomial [1 4 6 4 1]/16 blur with mirrored borders.
template <typename Scalar>
Field<Scalar> blur_binomial(const Field<Scalar>& src) {
  return detail::blur_binomial_cols(detail::blur_binomial_rows(src));
}

/// Blur then keep every second sample.
template <typename Scalar>
Field<Scalar> reduce(const Field<Scalar>& src) {
  const Field<Scalar> blurred = blur_binomial(src);
  const Dims d = level_dims(dims_of(src), 1);
  Field<Scalar> out(d.height, d.width);
  for (Eigen::Index y = 0; y < d.height; ++y)
    for (Eigen::Index x = 0; x < d.width; ++x) out(y, x) = blurred(2 * y, 2 * x);
  return out;
}

/// Burt-Adelson expansion of a coarse level back to `target` dimensions.
template <typename Scalar>
Field<Scalar> expand(const Field<Scalar>& coarse, Dims target) {
  const Eigen::Index mw = coarse.cols();
  const Eigen::Index mh = coarse.rows();
  Field<Scalar> wide(mh, target.width);
  for (Eigen::Index y = 0; y < mh; ++y)
    for (Eigen::Index x = 0; x < target.width; ++x)
      wide(y, x) = static_cast<Scalar>(detail::expand_tap(x, mw, [&](Eigen::Index c) { return double(coarse(y, c)); }));
  Field<Scalar> out(target.height, target.width);
  for (Eigen::Index y = 0; y < target.height; ++y)
    for (Eigen::Index x = 0; x < target.width; ++x)
      out(y, x) = static_cast<Scalar>(detail::expand_tap(y, mh, [&](Eigen::Index r) { return double(wide(r, x)); }));
  return out;
}

/// 2x2 min (or max) reduction; odd trailing rows/columns reduce over what exists.
template <typename Scalar, typename Op>
Field<Scalar> reduce_extremum(const Field<Scalar>& src, Op op) {
  const Dims d = level_dims(dims_of(src), 1);
  Field<Scalar> out(d.height, d.width);
  for (Eigen::Index y = 0; y < d.height; ++y) {
    const Eigen::Index y1 = std::min(2 * y + 1, src.rows() - 1);
    for (Eigen::Index x = 0; x < d.width; ++x) {
      const Eigen::Index x1 = std::min(2 * x + 1, src.cols() - 1);
      out(y, x) = op(op(src(2 * y, 2 * x), src(2 * y, x1)), op(src(y1, 2 * x), src(y1, x1)));
    }
  }
  return out;
}

template <typename Scalar>
Pyramid<Scalar> laplacian_from_gaussian(const Pyramid<Scalar>& gauss) {
  if (gauss.kind != PyramidKind::gaussian) throw ConfigError("laplacian_from_gaussian: need a gaussian pyramid");
  Pyramid<Scalar> lap{PyramidKind::laplacian, {}};
  lap.levels.reserve(gauss.depth());
  for (std::size_t l = 0; l + 1 < gauss.depth(); ++l)
    lap.levels.push_back(gauss[l] - expand(gauss[l + 1], dims_of(gauss[l])));
  lap.levels.push_back(gauss.levels.back());
  return lap;
}

template <typename Scalar>
Pyramid<Scalar> build_pyramid(const Field<Scalar>& img, PyramidKind kind, int levels) {
  if (levels < 1) throw ConfigError("build_pyramid: need at least one level");
  const Eigen::Index need = Eigen::Index{1} << (levels - 1);
  if (img.cols() < need || img.rows() < need)
    throw ConfigError("build_pyramid: image " + std::to_string(img.cols()) + "x" + std::to_string(img.rows()) +
                      " too small for " + std::to_string(levels) + " levels");

  if (kind == PyramidKind::laplacian) return laplacian_from_gaussian(build_pyramid(img, PyramidKind::gaussian, levels));

  Pyramid<Scalar> pyr{kind, {}};
  pyr.levels.reserve(static_cast<std::size_t>(levels));
  pyr.levels.push_back(img);
  for (int l = 1; l < levels; ++l) {
    const Field<Scalar>& prev = pyr.levels.back();
    switch (kind) {
      case PyramidKind::gaussian:
        pyr.levels.push_back(reduce(prev));
        break;
      case PyramidKind::min:
        pyr.levels.push_back(reduce_extremum(prev, [](Scalar a, Scalar b) { return std::min(a, b); }));
        break;
      case PyramidKind::max:
        pyr.levels.push_back(reduce_extremum(prev, [](Scalar a, Scalar b) { return std::max(a, b); }));
        break;
      case PyramidKind::laplacian:
        break;
    }
  }
  return pyr;
}

/// Inverse of the Laplacian decomposition.
template <typename Scalar>
Field<Scalar> collapse(const Pyramid<Scalar>& lap) {
  if (lap.kind != PyramidKind::laplacian) throw ConfigError("collapse: need a laplacian pyramid");
  Field<Scalar> acc = lap.levels.back();
  for (std::size_t l = lap.depth() - 1; l-- > 0;) acc = lap[l] + expand(acc, dims_of(lap[l]));
  return acc;
}

/// Level-0 pixel coordinate mapped onto level l.
inline double to_level_coord(double x, int level) { return (x + 0.5) / std::exp2(level) - 0.5; }

inline constexpr double kLogGuard = 1e-8;

/// |L| at a fractional pyramid level: bilinear |L_k| on the two bracketing
/// levels, blended geometrically (linear in the log domain). Falls back to a
/// linear blend when either magnitude is below kLogGuard.
template <typename Scalar>
double sample_laplacian_log(const Pyramid<Scalar>& pyr, double x, double y, double level) {
  if (pyr.kind != PyramidKind::laplacian) throw ConfigError("sample_laplacian_log: need a laplacian pyramid");
  const double top = static_cast<double>(pyr.depth() - 1);
  if (!(level >= 0.0 && level <= top)) throw ConfigError("sample_laplacian_log: level out of range");

  const auto magnitude = [&](int k) {
    const Field<Scalar>& f = pyr[static_cast<std::size_t>(k)];
    const double lx = std::clamp(to_level_coord(x, k), 0.0, static_cast<double>(f.cols() - 1));
    const double ly = std::clamp(to_level_coord(y, k), 0.0, static_cast<double>(f.rows() - 1));
    const auto x0 = static_cast<Eigen::Index>(lx);
    const auto y0 = static_cast<Eigen::Index>(ly);
    const auto x1 = std::min<Eigen::Index>(x0 + 1, f.cols() - 1);
    const auto y1 = std::min<Eigen::Index>(y0 + 1, f.rows() - 1);
    const double tx = lx - static_cast<double>(x0);
    const double ty = ly - static_cast<double>(y0);
    const auto a = [&](Eigen::Index r, Eigen::Index c) { return std::abs(static_cast<double>(f(r, c))); };
    return (1.0 - ty) * ((1.0 - tx) * a(y0, x0) + tx * a(y0, x1)) + ty * ((1.0 - tx) * a(y1, x0) + tx * a(y1, x1));
  };

  const int lo = static_cast<int>(std::floor(level));
  const double t = level - lo;
  const double v0 = magnitude(lo);
  if (t == 0.0) return v0;
  const double v1 = magnitude(lo + 1);
  if (v0 < kLogGuard || v1 < kLogGuard) return (1.0 - t) * v0 + t * v1;
  return std::exp((1.0 - t) * std::log(v0) + t * std::log(v1));
}

namespace detail {

/// Catmull-Rom weights for taps at offsets -1, 0, 1, 2 from floor(x).
inline std::array<double, 4> catmull_rom_weights(double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return {0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0), 0.5 * (-3.0 * t3 + 4.0 * t2 + t),
          0.5 * (t3 - t2)};
}

/// Sample i of a 1-D signal of length n, linearly extrapolated outside [0, n).
template <typename Get>
double extended(Eigen::Index i, Eigen::Index n, Get&& get) {
  if (i >= 0 && i < n) return get(i);
  if (n == 1) return get(0);
  if (i < 0) {
    const double f0 = get(0);
    return f0 + static_cast<double>(i) * (get(1) - f0);
  }
  const double fl = get(n - 1);
  return fl + static_cast<double>(i - n + 1) * (fl - get(n - 2));
}

struct CubicTaps {
  Eigen::Index base;
  std::array<double, 4> w;
};

inline CubicTaps cubic_taps(double x) {
  const double fl = std::floor(x);
  return {static_cast<Eigen::Index>(fl) - 1, catmull_rom_weights(x - fl)};
}

}  // namespace detail

/// Catmull-Rom interpolant at continuous pixel coordinates. Borders are
/// extended linearly, so linear functions are reproduced everywhere.
template <typename Scalar>
double sample_bicubic(const Field<Scalar>& img, double x, double y) {
  const auto tx = detail::cubic_taps(x);
  const auto ty = detail::cubic_taps(y);
  const auto row_value = [&](Eigen::Index r) {
    double acc = 0.0;
    for (int i = 0; i < 4; ++i)
      acc += tx.w[static_cast<std::size_t>(i)] *
             detail::extended(tx.base + i, img.cols(), [&](Eigen::Index c) { return double(img(r, c)); });
    return acc;
  };
  double acc = 0.0;
  for (int j = 0; j < 4; ++j)
    acc += ty.w[static_cast<std::size_t>(j)] * detail::extended(ty.base + j, img.rows(), row_value);
  return acc;
}

/// Bicubic (Catmull-Rom) upsampling with pixel-center alignment.
template <typename Scalar>
Field<Scalar> upsample_bicubic(const Field<Scalar>& img, Dims target) {
  if (target.width < img.cols() || target.height < img.rows())
    throw ConfigError("upsample_bicubic: target smaller than source");

  const auto taps_for = [](Eigen::Index n_src, Eigen::Index n_dst) {
    std::vector<detail::CubicTaps> taps(static_cast<std::size_t>(n_dst));
    const double scale = static_cast<double>(n_src) / static_cast<double>(n_dst);
    for (Eigen::Index i = 0; i < n_dst; ++i)
      taps[static_cast<std::size_t>(i)] = detail::cubic_taps((static_cast<double>(i) + 0.5) * scale - 0.5);
    return taps;
  };
  const auto xt = taps_for(img.cols(), target.width);
  const auto yt = taps_for(img.rows(), target.height);

  Field<double> wide(img.rows(), target.width);
  for (Eigen::Index y = 0; y < img.rows(); ++y) {
    const auto get = [&](Eigen::Index c) { return double(img(y, c)); };
    for (Eigen::Index x = 0; x < target.width; ++x) {
      const auto& t = xt[static_cast<std::size_t>(x)];
      double acc = 0.0;
      for (int i = 0; i < 4; ++i) acc += t.w[static_cast<std::size_t>(i)] * detail::extended(t.base + i, img.cols(), get);
      wide(y, x) = acc;
    }
  }
  Field<Scalar> out(target.height, target.width);
  for (Eigen::Index y = 0; y < target.height; ++y) {
    const auto& t = yt[static_cast<std::size_t>(y)];
    for (Eigen::Index x = 0; x < target.width; ++x) {
      const auto get = [&](Eigen::Index r) { return wide(r, x); };
      double acc = 0.0;
      for (int j = 0; j < 4; ++j) acc += t.w[static_cast<std::size_t>(j)] * detail::extended(t.base + j, img.rows(), get);
      out(y, x) = static_cast<Scalar>(acc);
    }
  }
  return out;
}

}  // namespace fovnoise
