#ifndef AXISCAL_DEHAZE_HPP
#define AXISCAL_DEHAZE_HPP

#include "axiscal/image.hpp"

namespace axiscal {

struct DehazeParams {
  Index patch_radius = 7;   // dark-channel min filter
  double a_fraction = 0.01; // brightest fraction averaged into A
  double t_floor = 0.1;
  Index gf_radius = 30;
  double gf_eps = 1e-3;
  int subsample_s = 1;      // 1 = exact guided filter, >1 = fast variant

  void validate() const;
};

/// Transmission values t(x,y), always within [floor, 1].
class TransmissionMap {
 public:
  TransmissionMap(const GrayImage& values, double floor)
      : values_(values.max(floor).min(1.0)), floor_(floor) {}

  const GrayImage& values() const { return values_; }
  double floor() const { return floor_; }

 private:
  GrayImage values_;
  double floor_;
};

namespace detail {

template <typename Scalar>
Image<Scalar> subsample_nearest(const Image<Scalar>& img, int s) {
  const Index h = (img.rows() + s - 1) / s, w = (img.cols() + s - 1) / s;
  Image<Scalar> out(h, w);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) out(y, x) = img(y * s, x * s);
  return out;
}

// Low-res sample (i, j) sits at full-res coordinate (i*s, j*s).
template <typename Scalar>
Image<Scalar> upsample_bilinear(const Image<Scalar>& lo, int s, Index rows, Index cols) {
  Image<Scalar> out(rows, cols);
  const Index lh = lo.rows(), lw = lo.cols();
  for (Index y = 0; y < rows; ++y) {
    const Scalar fy = std::min(Scalar(y) / Scalar(s), Scalar(lh - 1));
    const Index y0 = std::min<Index>(Index(fy), lh - 1);
    const Index y1 = std::min<Index>(y0 + 1, lh - 1);
    const Scalar wy = fy - Scalar(y0);
    for (Index x = 0; x < cols; ++x) {
      const Scalar fx = std::min(Scalar(x) / Scalar(s), Scalar(lw - 1));
      const Index x0 = std::min<Index>(Index(fx), lw - 1);
      const Index x1 = std::min<Index>(x0 + 1, lw - 1);
      const Scalar wx = fx - Scalar(x0);
      out(y, x) = (1 - wy) * ((1 - wx) * lo(y0, x0) + wx * lo(y0, x1)) +
                  wy * ((1 - wx) * lo(y1, x0) + wx * lo(y1, x1));
    }
  }
  return out;
}

template <typename Scalar>
void guided_coefficients(const Image<Scalar>& guide, const Image<Scalar>& input, Index radius,
                         Scalar eps, Image<Scalar>& mean_a, Image<Scalar>& mean_b) {
  const Image<Scalar> mean_i = box_mean_filter(guide, radius);
  const Image<Scalar> mean_p = box_mean_filter(input, radius);
  const Image<Scalar> corr_i = box_mean_filter(guide * guide, radius);
  const Image<Scalar> corr_ip = box_mean_filter(guide * input, radius);
  const Image<Scalar> var_i = corr_i - mean_i * mean_i;
  const Image<Scalar> cov_ip = corr_ip - mean_i * mean_p;
  const Image<Scalar> a = cov_ip / (var_i + eps);
  const Image<Scalar> b = mean_p - a * mean_i;
  mean_a = box_mean_filter(a, radius);
  mean_b = box_mean_filter(b, radius);
}

}  // namespace detail

/// Edge-preserving filter of `input` steered by `guide`:
///   a = cov(I,p) / (var(I) + eps), b = mean(p) - a mean(I),
///   q = mean(a) I + mean(b),
/// with every mean a truncated box mean of the given radius. For subsample > 1
/// the coefficients are computed on nearest-subsampled images with radius
/// radius/s and bilinearly upsampled before forming q. No clamping.
template <typename DerivedG, typename DerivedP>
Image<typename DerivedG::Scalar> guided_filter(const Eigen::ArrayBase<DerivedG>& guide,
                                               const Eigen::ArrayBase<DerivedP>& input,
                                               Index radius, typename DerivedG::Scalar eps,
                                               int subsample = 1) {
  using Scalar = typename DerivedG::Scalar;
  if (guide.rows() != input.rows() || guide.cols() != input.cols())
    throw Error(ErrorCode::ShapeMismatch, "guided_filter: guide and input differ in shape");
  if (subsample < 1) throw Error(ErrorCode::InvalidArgument, "guided_filter: subsample < 1");
  const Image<Scalar> g = guide;
  const Image<Scalar> p = input.template cast<Scalar>();
  Image<Scalar> mean_a, mean_b;
  if (subsample == 1) {
    detail::guided_coefficients<Scalar>(g, p, radius, eps, mean_a, mean_b);
    return mean_a * g + mean_b;
  }
  const Index lo_radius = std::max<Index>(1, radius / subsample);
  detail::guided_coefficients<Scalar>(detail::subsample_nearest(g, subsample),
                                      detail::subsample_nearest(p, subsample), lo_radius, eps,
                                      mean_a, mean_b);
  return detail::upsample_bilinear(mean_a, subsample, g.rows(), g.cols()) * g +
         detail::upsample_bilinear(mean_b, subsample, g.rows(), g.cols());
}

/// Mean of the brightest ceil(fraction * N) samples, floored at 1e-6.
double estimate_atmospheric_light(const GrayImage& img, double a_fraction = 0.01);

/// t = 1 - min_filter(I, patch_radius) / A, clamped to [t_floor, 1].
TransmissionMap rough_transmission(const GrayImage& img, double atmospheric,
                                   const DehazeParams& params = {});

/// J = (I - A) / t + A, clamped to [0,1].
GrayImage recover(const GrayImage& img, const TransmissionMap& t, double atmospheric);
/// Recovery without the final clamp.
GrayImage recover_unclamped(const GrayImage& img, const TransmissionMap& t, double atmospheric);

struct GfaResult {
  GrayImage enhanced;
  double atmospheric = 0.0;
  TransmissionMap rough;
  TransmissionMap refined;
};

/// Atmospheric light -> rough transmission -> guided refinement (guide = I)
/// -> clamp -> recovery, keeping the intermediates.
GfaResult gfa_enhance_detailed(const GrayImage& img, const DehazeParams& params = {});

GrayImage gfa_enhance(const GrayImage& img, const DehazeParams& params = {});

/// Global linear stretch to [0,1]; constant images come back unchanged.
GrayImage max_min_stretch(const GrayImage& img);

}  // namespace axiscal

#endif  // AXISCAL_DEHAZE_HPP
