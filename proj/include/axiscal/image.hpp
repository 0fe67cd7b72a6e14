#ifndef AXISCAL_IMAGE_HPP
#define AXISCAL_IMAGE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "axiscal/error.hpp"

namespace axiscal {

using Eigen::Index;

/// Single-channel raster, row-major. Rows are y, columns are x.
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Luminance image with samples in [0,1].
using GrayImage = Image<double>;

/// Foreground flags, same shape as the image they were derived from.
using BitMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Roi {
  Index x0 = 0;
  Index y0 = 0;
  Index width = 0;
  Index height = 0;

  bool contains(double x, double y) const {
    return x >= double(x0) && x <= double(x0 + width - 1) && y >= double(y0) &&
           y <= double(y0 + height - 1);
  }
  bool fits(Index image_w, Index image_h) const {
    return x0 >= 0 && y0 >= 0 && width > 0 && height > 0 && x0 + width <= image_w &&
           y0 + height <= image_h;
  }
  friend bool operator==(const Roi&, const Roi&) = default;
};

struct ThresholdParams {
  int ksize = 17;
  double offset_c = 0.0;
};

struct Circle {
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;
};

namespace detail {

// Mean over a truncated 1-D window along rows (axis 1) or columns (axis 0),
// divided by the in-bounds count. Values are offset by `ref` so that constant
// inputs come back bit-exact.
template <typename Scalar>
Image<Scalar> window_mean_1d(const Image<Scalar>& src, Index radius, int axis, Scalar ref) {
  const Index rows = src.rows();
  const Index cols = src.cols();
  Image<Scalar> out(rows, cols);
  const Index lanes = axis == 1 ? rows : cols;
  const Index len = axis == 1 ? cols : rows;
  std::vector<Scalar> prefix(static_cast<size_t>(len) + 1);
  for (Index lane = 0; lane < lanes; ++lane) {
    prefix[0] = Scalar(0);
    for (Index i = 0; i < len; ++i) {
      const Scalar v = axis == 1 ? src(lane, i) : src(i, lane);
      prefix[i + 1] = prefix[i] + (v - ref);
    }
    for (Index i = 0; i < len; ++i) {
      const Index lo = std::max<Index>(0, i - radius);
      const Index hi = std::min<Index>(len - 1, i + radius);
      const Scalar m = ref + (prefix[hi + 1] - prefix[lo]) / Scalar(hi - lo + 1);
      if (axis == 1)
        out(lane, i) = m;
      else
        out(i, lane) = m;
    }
  }
  return out;
}

template <typename Scalar>
Image<Scalar> window_min_1d(const Image<Scalar>& src, Index radius, int axis) {
  const Index rows = src.rows();
  const Index cols = src.cols();
  Image<Scalar> out(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      Scalar m = src(r, c);
      if (axis == 1) {
        const Index lo = std::max<Index>(0, c - radius);
        const Index hi = std::min<Index>(cols - 1, c + radius);
        for (Index k = lo; k <= hi; ++k) m = std::min(m, src(r, k));
      } else {
        const Index lo = std::max<Index>(0, r - radius);
        const Index hi = std::min<Index>(rows - 1, r + radius);
        for (Index k = lo; k <= hi; ++k) m = std::min(m, src(k, c));
      }
      out(r, c) = m;
    }
  }
  return out;
}

}  // namespace detail

/// Mean over the (2r+1)x(2r+1) window, truncated at the borders and divided
/// by the in-bounds count. Separable prefix sums; cost does not depend on the
/// radius.
template <typename Derived>
Image<typename Derived::Scalar> box_mean_filter(const Eigen::ArrayBase<Derived>& img, Index radius) {
  using Scalar = typename Derived::Scalar;
  if (radius < 0) throw Error(ErrorCode::InvalidArgument, "box_mean_filter: negative radius");
  Image<Scalar> src = img;
  if (src.size() == 0 || radius == 0) return src;
  const Scalar ref = src(0, 0);
  return detail::window_mean_1d<Scalar>(detail::window_mean_1d<Scalar>(src, radius, 1, ref), radius,
                                        0, ref);
}

/// Minimum over the truncated (2r+1)x(2r+1) window.
template <typename Derived>
Image<typename Derived::Scalar> min_filter(const Eigen::ArrayBase<Derived>& img, Index radius) {
  using Scalar = typename Derived::Scalar;
  if (radius < 0) throw Error(ErrorCode::InvalidArgument, "min_filter: negative radius");
  Image<Scalar> src = img;
  if (src.size() == 0 || radius == 0) return src;
  return detail::window_min_1d<Scalar>(detail::window_min_1d<Scalar>(src, radius, 1), radius, 0);
}

/// Gaussian sigma used for a ksize window: 0.3*((ksize-1)*0.5 - 1) + 0.8.
inline double gaussian_sigma_for_ksize(int ksize) { return 0.3 * ((ksize - 1) * 0.5 - 1.0) + 0.8; }

/// Normalized 1-D Gaussian weights of length ksize; the 2-D kernel is the
/// outer product of this vector with itself.
Eigen::VectorXd gaussian_kernel_1d(int ksize, double sigma);

/// Separable weighted mean with a symmetric odd-length kernel; border windows
/// are renormalized by the sum of the in-bounds weights.
GrayImage separable_weighted_mean(const GrayImage& img, const Eigen::VectorXd& kernel);

/// Gaussian-weighted local mean with border windows renormalized by the sum
/// of the in-bounds weights.
GrayImage gaussian_local_mean(const GrayImage& img, int ksize);

/// Foreground where src > (Gaussian-weighted local mean - offset_c).
BitMask adaptive_gaussian_threshold(const GrayImage& img, const ThresholdParams& params = {});

/// Square structuring element; pixels outside the image count as background.
BitMask erode(const BitMask& mask, int se_size);

/// Largest 8-connected component of the mask (ties: first in row-major scan).
BitMask largest_component(const BitMask& mask);

/// Exact squared Euclidean distance from each pixel to the nearest
/// background pixel; the region outside the image is background.
Eigen::ArrayXXd squared_distance_transform(const BitMask& mask);

/// Largest inscribed circle of the largest connected component. The radius is
/// the distance to the nearest background pixel center minus half a pixel, so
/// a fully set w x w square reports w/2.
Circle largest_inscribed_circle(const BitMask& mask);

inline GrayImage clamp01(const GrayImage& img) { return img.max(0.0).min(1.0); }

inline GrayImage crop(const GrayImage& img, const Roi& roi) {
  if (!roi.fits(img.cols(), img.rows()))
    throw Error(ErrorCode::InvalidArgument, "crop: ROI outside image");
  return img.block(roi.y0, roi.x0, roi.height, roi.width);
}

/// Binary PGM (P5, maxval 255). Samples map n -> n/255 on load and
/// round(s*255) on save.
GrayImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& img);

GrayImage decode_pgm(const std::string& bytes);
std::string encode_pgm(const GrayImage& img);

}  // namespace axiscal

#endif  // AXISCAL_IMAGE_HPP
