#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>

namespace fovnoise {

/// Scalar image field stored row-major: rows are image rows (y), columns are x.
template <typename Scalar>
using Field = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Pipeline-precision field.
using FieldMap = Field<float>;

struct Dims {
  Eigen::Index width = 0;
  Eigen::Index height = 0;

  friend bool operator==(const Dims&, const Dims&) = default;
};

template <typename Derived>
inline Dims dims_of(const Eigen::ArrayBase<Derived>& f) {
  return {f.cols(), f.rows()};
}

template <typename Scalar>
inline Field<Scalar> make_field(Dims d, Scalar value = Scalar(0)) {
  return Field<Scalar>::Constant(d.height, d.width, value);
}

template <typename Derived>
inline bool all_finite(const Eigen::ArrayBase<Derived>& f) {
  return f.isFinite().all();
}

/// Reflect-101 index into [0, n): -1 -> 1, n -> n-2.
inline Eigen::Index mirror_index(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  const Eigen::Index period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

inline Eigen::Index clamp_index(Eigen::Index i, Eigen::Index n) {
  return std::clamp<Eigen::Index>(i, 0, n - 1);
}

/// Bilinear sample at continuous pixel-center coordinates (x, y), edge clamped.
template <typename Scalar>
Scalar sample_bilinear(const Field<Scalar>& f, double x, double y) {
  const auto w = f.cols();
  const auto h = f.rows();
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const auto x0 = static_cast<Eigen::Index>(std::floor(x));
  const auto y0 = static_cast<Eigen::Index>(std::floor(y));
  const auto x1 = std::min<Eigen::Index>(x0 + 1, w - 1);
  const auto y1 = std::min<Eigen::Index>(y0 + 1, h - 1);
  const double tx = x - static_cast<double>(x0);
  const double ty = y - static_cast<double>(y0);
  const double top = (1.0 - tx) * f(y0, x0) + tx * f(y0, x1);
  const double bottom = (1.0 - tx) * f(y1, x0) + tx * f(y1, x1);
  return static_cast<Scalar>((1.0 - ty) * top + ty * bottom);
}

template <typename Scalar>
Scalar sample_nearest(const Field<Scalar>& f, double x, double y) {
  const auto xi = clamp_index(static_cast<Eigen::Index>(std::lround(x)), f.cols());
  const auto yi = clamp_index(static_cast<Eigen::Index>(std::lround(y)), f.rows());
  return f(yi, xi);
}

}  // namespace fovnoise
