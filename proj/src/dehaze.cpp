#include "axiscal/dehaze.hpp"

#include <algorithm>
#include <functional>
#include <vector>

namespace axiscal {

void DehazeParams::validate() const {
  if (!(a_fraction > 0.0 && a_fraction <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "a_fraction must be in (0,1]");
  if (!(t_floor > 0.0 && t_floor < 1.0))
    throw Error(ErrorCode::InvalidArgument, "t_floor must be in (0,1)");
  if (gf_radius < 1) throw Error(ErrorCode::InvalidArgument, "gf_radius must be >= 1");
  if (!(gf_eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "gf_eps must be > 0");
  if (patch_radius < 0) throw Error(ErrorCode::InvalidArgument, "patch_radius must be >= 0");
  if (subsample_s < 1) throw Error(ErrorCode::InvalidArgument, "subsample_s must be >= 1");
}

double estimate_atmospheric_light(const GrayImage& img, double a_fraction) {
  if (img.size() == 0) throw Error(ErrorCode::InvalidArgument, "atmospheric light of empty image");
  const auto n = static_cast<std::size_t>(img.size());
  const auto k = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(a_fraction * double(n) - 1e-9)), 1, n);
  std::vector<double> samples(img.data(), img.data() + n);
  std::nth_element(samples.begin(), samples.begin() + std::ptrdiff_t(k - 1), samples.end(),
                   std::greater<>());
  std::sort(samples.begin(), samples.begin() + std::ptrdiff_t(k), std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += samples[i];
  return std::max(sum / double(k), 1e-6);
}

TransmissionMap rough_transmission(const GrayImage& img, double atmospheric,
                                   const DehazeParams& params) {
  if (!(atmospheric > 0.0)) throw Error(ErrorCode::InvalidArgument, "A must be > 0");
  const GrayImage dark = min_filter(img, params.patch_radius);
  return TransmissionMap(1.0 - dark / atmospheric, params.t_floor);
}

GrayImage recover_unclamped(const GrayImage& img, const TransmissionMap& t, double atmospheric) {
  if (img.rows() != t.values().rows() || img.cols() != t.values().cols())
    throw Error(ErrorCode::ShapeMismatch, "recover: image and transmission differ in shape");
  return (img - atmospheric) / t.values() + atmospheric;
}

GrayImage recover(const GrayImage& img, const TransmissionMap& t, double atmospheric) {
  return clamp01(recover_unclamped(img, t, atmospheric));
}

GfaResult gfa_enhance_detailed(const GrayImage& img, const DehazeParams& params) {
  params.validate();
  const double a = estimate_atmospheric_light(img, params.a_fraction);
  TransmissionMap rough = rough_transmission(img, a, params);
  TransmissionMap refined(
      guided_filter(img, rough.values(), params.gf_radius, params.gf_eps, params.subsample_s),
      params.t_floor);
  GrayImage enhanced = recover(img, refined, a);
  return GfaResult{std::move(enhanced), a, std::move(rough), std::move(refined)};
}

GrayImage gfa_enhance(const GrayImage& img, const DehazeParams& params) {
  return gfa_enhance_detailed(img, params).enhanced;
}

GrayImage max_min_stretch(const GrayImage& img) {
  if (img.size() == 0) return img;
  const double lo = img.minCoeff(), hi = img.maxCoeff();
  if (hi <= lo) return img;
  return (img - lo) / (hi - lo);
}

}  // namespace axiscal
