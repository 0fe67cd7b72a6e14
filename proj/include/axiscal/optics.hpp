#ifndef AXISCAL_OPTICS_HPP
#define AXISCAL_OPTICS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "axiscal/focus.hpp"
#include "axiscal/image.hpp"

namespace axiscal {

/// Rotationally symmetric asphere. coeffs[0] is A4, coeffs[1] is A6, and so
/// on (A_{2i} for i = 2, 3, ...), in mm^(1-2i).
struct AsphericSurface {
  double r0 = 1.0;  // vertex-ball radius, mm
  double k = -1.0;  // conic constant
  std::vector<double> coeffs;

  double curvature() const { return 1.0 / r0; }
};

/// Named surfaces: "paraboloid" (r0 18.281, k -1, no high-order terms) and
/// the seven catalogue entries "catalog-1" .. "catalog-7".
AsphericSurface surface_preset(const std::string& name);
std::vector<std::string> surface_preset_names();

struct VisionSystem {
  double pixel_pitch_um = 5.5;
  double magnification_k = 4.0;
  Index sensor_w = 3296;
  Index sensor_h = 2472;
  double dof_mm = 0.0275;

  /// Object-space micrometers per image pixel.
  double um_per_px() const { return pixel_pitch_um / magnification_k; }
};

/// Surface height z(h), h the radial distance in mm.
double sag(const AsphericSurface& surface, double h);

/// dz/dh, analytic.
double sag_slope(const AsphericSurface& surface, double h);

/// Axial distance between the vertex-ball center and the point where the
/// surface normal at height h meets the axis: z + h / z' - r0. Evaluated in a
/// cancellation-free form so the paraboloid case is exact to rounding.
double normal_aberration(const AsphericSurface& surface, double h);

/// Largest usable height for the surface (radicand limit, or r0 when unbounded).
double domain_limit(const AsphericSurface& surface);

/// First h where the normal aberration reaches the system depth of field,
/// located by a coarse scan of [0, h_bracket] followed by bisection.
double clear_radius(const AsphericSurface& surface, const VisionSystem& system,
                    std::optional<double> h_bracket = std::nullopt);

/// Field of view in mm: sensor size times pixel pitch over magnification.
std::pair<double, double> field_of_view(const VisionSystem& system);

struct SceneSpec {
  Index image_w = 200;
  Index image_h = 200;
  double cx = 100.0;
  double cy = 100.0;
  double line_half_width = 1.0;  // flat core of each arm, px
  double line_sigma = 2.0;       // Gaussian edge roll-off of each arm, px
  double core_sigma = 6.0;       // bright glow at the intersection, px; 0 disables
  double arm_gain = 0.7;         // arm brightness relative to the glow
  double peak = 0.9;
  double background = 0.1;
  double falloff_radius = 150.0;  // radial brightness envelope, px; 0 disables

  void validate() const;
};

struct Scene {
  GrayImage image;
  double cx = 0.0;  // ground-truth crosshair intersection, px
  double cy = 0.0;
};

/// Two arms through (cx, cy) and a Gaussian glow at the intersection,
/// combined with max(). Each arm has a flat core of line_half_width and
/// Gaussian edges. Everything is optionally dimmed away from the
/// intersection by exp(-r^2 / (2 falloff^2)).
Scene render_crosshair(const SceneSpec& spec);

struct DegradeSpec {
  double t_value = 0.3;
  double a_value = 0.8;
  double psf_sigma = 2.5;
  double noise_sigma = 0.004;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Separable Gaussian blur truncated at 3 sigma; border windows renormalized.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

/// Blur, then I = J t + A (1 - t), then seeded Gaussian noise, then clamp.
GrayImage degrade(const GrayImage& img, const DegradeSpec& spec);

/// Optional radially varying blur: sigma(p) = psf_sigma + gain_px * dSn(h)/dof
/// where h is the object-space distance of p from `center`.
struct RadialBlur {
  AsphericSurface surface;
  VisionSystem system;
  double gain_px = 1.0;
  int levels = 8;
};

GrayImage degrade_radial(const GrayImage& img, const DegradeSpec& spec, double cx, double cy,
                         const RadialBlur& radial);

/// Axial focus sweep of one scene: image i is blurred with
/// base_sigma + sigma_per_step * |i - sharp_index| and then hazed/noised per
/// `degrade` (its psf_sigma is ignored, its seed advances per image).
struct StackSpec {
  SceneSpec scene;
  std::size_t count = 21;
  std::size_t sharp_index = 10;
  double base_sigma = 1.2;
  double sigma_per_step = 0.6;
  DegradeSpec degrade{1.0, 0.8, 0.0, 0.002, 1};
  double axial_step_um = 10.0;

  void validate() const;
};

FocusStack simulate_focus_stack(const StackSpec& spec);

}  // namespace axiscal

#endif  // AXISCAL_OPTICS_HPP
