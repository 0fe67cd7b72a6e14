#include "axiscal/optics.hpp"

#include <cmath>
#include <random>

namespace axiscal {

namespace {

// Catalogue surfaces: r0 (mm), k, A4 (1e-6), A6 (1e-9).
struct PresetRow {
  double r0, k, a4, a6;
};
constexpr PresetRow kCatalog[] = {
    {18.2810, -1.0000, 2.000, 0.0},   {8.8182, -0.9992, 86.822, 63.760},
    {13.5510, -0.6301, 5.500, 0.0},   {13.8590, -1.0000, 0.0, 0.0},
    {10.9150, -2.2206, 0.0, 0.0},     {8.6310, -7.5380, 0.0, 0.0},
    {31.3840, -1.9110, 5.000, 0.0},
};

double radicand(const AsphericSurface& s, double h) {
  const double c = s.curvature();
  return 1.0 - (1.0 + s.k) * c * c * h * h;
}

// sum_i 2i A_{2i} h^(2i-2), i.e. (dP/dh) / h for the polynomial part.
double poly_slope_over_h(const AsphericSurface& s, double h) {
  double acc = 0.0;
  double h_pow = h * h;  // h^(2i-2) starting at i = 2
  for (std::size_t j = 0; j < s.coeffs.size(); ++j) {
    const double i = double(j + 2);
    acc += 2.0 * i * s.coeffs[j] * h_pow;
    h_pow *= h * h;
  }
  return acc;
}

void check_surface(const AsphericSurface& s) {
  if (!(s.r0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "surface r0 must be > 0");
}

}  // namespace

AsphericSurface surface_preset(const std::string& name) {
  if (name == "paraboloid") return AsphericSurface{18.281, -1.0, {}};
  for (std::size_t i = 0; i < std::size(kCatalog); ++i) {
    if (name != "catalog-" + std::to_string(i + 1)) continue;
    const PresetRow& row = kCatalog[i];
    AsphericSurface s{row.r0, row.k, {}};
    if (row.a4 != 0.0 || row.a6 != 0.0) s.coeffs.push_back(row.a4 * 1e-6);
    if (row.a6 != 0.0) s.coeffs.push_back(row.a6 * 1e-9);
    return s;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown surface preset '" + name + "'");
}

std::vector<std::string> surface_preset_names() {
  std::vector<std::string> names{"paraboloid"};
  for (std::size_t i = 0; i < std::size(kCatalog); ++i) names.push_back("catalog-" + std::to_string(i + 1));
  return names;
}

double sag(const AsphericSurface& surface, double h) {
  check_surface(surface);
  const double rad = radicand(surface, h);
  if (rad < 0.0) throw Error(ErrorCode::DomainError, "sag: negative radicand");
  const double c = surface.curvature();
  double z = c * h * h / (1.0 + std::sqrt(rad));
  double h_pow = h * h * h * h;
  for (double a : surface.coeffs) {
    z += a * h_pow;
    h_pow *= h * h;
  }
  return z;
}

double sag_slope(const AsphericSurface& surface, double h) {
  check_surface(surface);
  const double rad = radicand(surface, h);
  if (rad <= 0.0) throw Error(ErrorCode::DomainError, "sag_slope: non-positive radicand");
  return h * (surface.curvature() / std::sqrt(rad) + poly_slope_over_h(surface, h));
}

double normal_aberration(const AsphericSurface& surface, double h) {
  check_surface(surface);
  if (h < 0.0) throw Error(ErrorCode::DomainError, "normal_aberration: h must be >= 0");
  const double rad = radicand(surface, h);
  if (rad <= 0.0) throw Error(ErrorCode::DomainError, "normal_aberration: non-positive radicand");
  const double c = surface.curvature();
  const double root = std::sqrt(rad);
  const double poly = poly_slope_over_h(surface, h);
  const double slope_over_h = c / root + poly;
  if (h > 0.0 && !(slope_over_h > 0.0))
    throw Error(ErrorCode::DegenerateSlope, "normal_aberration: non-positive surface slope");
  // h/z' - r0 = [-(1+k) c^2 h^2 / (S (1+S)) - r0 P'/h] / (z'/h), S = sqrt(radicand)
  const double numer = -(1.0 + surface.k) * c * c * h * h / (root * (1.0 + root)) - surface.r0 * poly;
  return sag(surface, h) + numer / slope_over_h;
}

double domain_limit(const AsphericSurface& surface) {
  check_surface(surface);
  const double kp = 1.0 + surface.k;
  if (kp <= 0.0) return surface.r0;
  return std::min(surface.r0, 1.0 / (surface.curvature() * std::sqrt(kp)));
}

double clear_radius(const AsphericSurface& surface, const VisionSystem& system,
                    std::optional<double> h_bracket) {
  if (!(system.dof_mm > 0.0)) throw Error(ErrorCode::InvalidArgument, "dof must be > 0");
  const double limit = domain_limit(surface) * (1.0 - 1e-9);
  const double top = std::min(h_bracket.value_or(limit), limit);
  const int steps = 4000;
  double lo = 0.0;
  for (int i = 1; i <= steps; ++i) {
    const double h = top * double(i) / steps;
    if (normal_aberration(surface, h) >= system.dof_mm) {
      double hi = h;
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (normal_aberration(surface, mid) >= system.dof_mm)
          hi = mid;
        else
          lo = mid;
      }
      return 0.5 * (lo + hi);
    }
    lo = h;
  }
  throw Error(ErrorCode::NoCrossing, "clear_radius: aberration stays below depth of field");
}

std::pair<double, double> field_of_view(const VisionSystem& system) {
  const double mm_per_px = system.pixel_pitch_um / system.magnification_k / 1000.0;
  return {double(system.sensor_w) * mm_per_px, double(system.sensor_h) * mm_per_px};
}

void SceneSpec::validate() const {
  if (image_w < 1 || image_h < 1) throw Error(ErrorCode::InvalidArgument, "scene: empty image");
  if (cx < 0.0 || cy < 0.0 || cx > double(image_w - 1) || cy > double(image_h - 1))
    throw Error(ErrorCode::InvalidArgument, "scene: center outside image");
  if (!(background >= 0.0 && background < peak && peak <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "scene: need 0 <= background < peak <= 1");
  if (!(line_sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "scene: line_sigma must be > 0");
  if (!(arm_gain > 0.0 && arm_gain <= 1.0)) throw Error(ErrorCode::InvalidArgument, "scene: arm_gain in (0,1]");
  if (core_sigma < 0.0) throw Error(ErrorCode::InvalidArgument, "scene: negative core_sigma");
  if (line_half_width < 0.0) throw Error(ErrorCode::InvalidArgument, "scene: negative line_half_width");
  if (falloff_radius < 0.0) throw Error(ErrorCode::InvalidArgument, "scene: negative falloff");
}

Scene render_crosshair(const SceneSpec& spec) {
  spec.validate();
  Scene scene{GrayImage(spec.image_h, spec.image_w), spec.cx, spec.cy};
  const double inv = 1.0 / (2.0 * spec.line_sigma * spec.line_sigma);
  const double core = spec.core_sigma > 0.0 ? 1.0 / (2.0 * spec.core_sigma * spec.core_sigma) : 0.0;
  const double fall = spec.falloff_radius > 0.0 ? 1.0 / (2.0 * spec.falloff_radius * spec.falloff_radius) : 0.0;
  for (Index y = 0; y < spec.image_h; ++y) {
    const double dy = double(y) - spec.cy;
    const double ey = std::max(std::abs(dy) - spec.line_half_width, 0.0);
    const double horizontal = std::exp(-ey * ey * inv);
    for (Index x = 0; x < spec.image_w; ++x) {
      const double dx = double(x) - spec.cx;
      const double ex = std::max(std::abs(dx) - spec.line_half_width, 0.0);
      const double vertical = std::exp(-ex * ex * inv);
      const double r2 = dx * dx + dy * dy;
      const double glow = core > 0.0 ? std::exp(-r2 * core) : 0.0;
      const double envelope = std::exp(-r2 * fall);
      scene.image(y, x) =
          spec.background + (spec.peak - spec.background) * std::max(spec.arm_gain * std::max(horizontal, vertical), glow) * envelope;
    }
  }
  return scene;
}

void DegradeSpec::validate() const {
  if (!(t_value > 0.0 && t_value <= 1.0)) throw Error(ErrorCode::InvalidArgument, "degrade: t in (0,1]");
  if (!(a_value > 0.0 && a_value <= 1.0)) throw Error(ErrorCode::InvalidArgument, "degrade: A in (0,1]");
  if (psf_sigma < 0.0 || noise_sigma < 0.0)
    throw Error(ErrorCode::InvalidArgument, "degrade: sigmas must be >= 0");
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = int(std::ceil(3.0 * sigma));
  return separable_weighted_mean(img, gaussian_kernel_1d(2 * radius + 1, sigma));
}

namespace {

GrayImage haze_and_noise(const GrayImage& blurred, const DegradeSpec& spec) {
  GrayImage out = blurred * spec.t_value + spec.a_value * (1.0 - spec.t_value);
  if (spec.noise_sigma > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (Index i = 0; i < out.size(); ++i) out.data()[i] += noise(rng);
  }
  return clamp01(out);
}

}  // namespace

GrayImage degrade(const GrayImage& img, const DegradeSpec& spec) {
  spec.validate();
  return haze_and_noise(gaussian_blur(img, spec.psf_sigma), spec);
}

GrayImage degrade_radial(const GrayImage& img, const DegradeSpec& spec, double cx, double cy,
                         const RadialBlur& radial) {
  spec.validate();
  if (radial.levels < 2) throw Error(ErrorCode::InvalidArgument, "radial blur needs >= 2 levels");
  const double mm_per_px = radial.system.um_per_px() / 1000.0;
  const double h_max = domain_limit(radial.surface) * (1.0 - 1e-9);
  GrayImage sigma_map(img.rows(), img.cols());
  for (Index y = 0; y < img.rows(); ++y) {
    for (Index x = 0; x < img.cols(); ++x) {
      const double h = std::min(std::hypot(double(x) - cx, double(y) - cy) * mm_per_px, h_max);
      sigma_map(y, x) = spec.psf_sigma +
                        radial.gain_px * normal_aberration(radial.surface, h) / radial.system.dof_mm;
    }
  }
  const double lo = sigma_map.minCoeff(), hi = sigma_map.maxCoeff();
  if (hi - lo < 1e-12) return haze_and_noise(gaussian_blur(img, lo), spec);

  std::vector<GrayImage> stack;
  for (int l = 0; l < radial.levels; ++l)
    stack.push_back(gaussian_blur(img, lo + (hi - lo) * l / (radial.levels - 1)));
  GrayImage blurred(img.rows(), img.cols());
  for (Index i = 0; i < img.size(); ++i) {
    const double pos = (sigma_map.data()[i] - lo) / (hi - lo) * (radial.levels - 1);
    const int l0 = std::min(int(pos), radial.levels - 2);
    const double w = pos - l0;
    blurred.data()[i] = (1.0 - w) * stack[size_t(l0)].data()[i] + w * stack[size_t(l0 + 1)].data()[i];
  }
  return haze_and_noise(blurred, spec);
}

void StackSpec::validate() const {
  scene.validate();
  degrade.validate();
  if (count == 0 || sharp_index >= count) throw Error(ErrorCode::InvalidArgument, "stack: sharp index outside stack");
  if (base_sigma < 0.0 || sigma_per_step < 0.0) throw Error(ErrorCode::InvalidArgument, "stack: negative blur");
}

FocusStack simulate_focus_stack(const StackSpec& spec) {
  spec.validate();
  const GrayImage sharp = render_crosshair(spec.scene).image;
  FocusStack out{{}, spec.axial_step_um};
  for (std::size_t i = 0; i < spec.count; ++i) {
    const double steps = std::abs(double(i) - double(spec.sharp_index));
    DegradeSpec d = spec.degrade;
    d.psf_sigma = spec.base_sigma + spec.sigma_per_step * steps;
    d.seed = spec.degrade.seed + i;
    out.images.push_back(degrade(sharp, d));
  }
  return out;
}

}  // namespace axiscal
