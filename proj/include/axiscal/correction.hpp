#ifndef AXISCAL_CORRECTION_HPP
#define AXISCAL_CORRECTION_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "axiscal/image.hpp"

namespace axiscal {

using Point2 = Eigen::Vector2d;

struct CircleFitResult {
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;
  double rms_residual = 0.0;
};

/// Algebraic (Kasa) least-squares circle through the points: minimizes
/// sum (x^2 + y^2 + D x + E y + F)^2. Coordinates are centered on their mean
/// before solving.
CircleFitResult fit_circle(std::span<const Point2> points);

/// Ground truth of the simulated spin rig.
struct RigState {
  Point2 ecc_um = Point2::Zero();  // optical axis minus spin axis, object space
  double spin_deg = 0.0;
  double scale_um_per_px = 1.375;
  double obs_noise_px = 0.0;
  double act_noise_um = 0.0;
  std::uint64_t seed = 1;
  Point2 axis_px{1647.5, 1235.5};  // spin axis on the sensor

  void validate() const;
};

/// Where the crosshair center lands for a given true position; the default
/// (point mode) adds the rig's observation noise instead.
using CenterObserver = std::function<Point2(const Point2& true_center_px)>;

/// Stateful rig: owns the noise stream, so repeated runs from the same
/// RigState are bit-identical.
class VirtualRig {
 public:
  explicit VirtualRig(const RigState& state);

  const RigState& state() const { return state_; }

  /// Noise-free crosshair position at the given spin angle.
  Point2 true_center(double angle_deg) const;

  /// Point mode: true center plus Gaussian noise. With an observer, the
  /// observer's result for the true center.
  Point2 observe(double angle_deg, const CenterObserver& observer = {});

  /// Shifts the element by `move_um` with Gaussian actuation error per axis.
  void apply_move(const Point2& move_um);

 private:
  RigState state_;
  std::mt19937_64 rng_;
};

struct CorrectionConfig {
  int steps_per_rev = 12;
  double step_deg = 30.0;
  double threshold_um = 10.0;
  int max_iter = 10;

  void validate() const;
};

struct CorrectionRecord {
  int iteration = 0;
  CircleFitResult fit;
  double residual_um = 0.0;  // fitted radius converted to micrometers
  Point2 offset_um = Point2::Zero();  // commanded move; zero on the terminating pass
  Point2 true_ecc_um = Point2::Zero();  // ground truth before the move
};

struct CorrectionLog {
  std::vector<CorrectionRecord> records;
  bool converged = false;
  int moves = 0;
  Point2 final_ecc_um = Point2::Zero();
};

/// Eccentricity estimate in object space: each observation de-rotated about
/// the fitted center, averaged, scaled to micrometers.
Point2 estimate_eccentricity(std::span<const Point2> points, std::span<const double> angles_deg,
                             const CircleFitResult& fit, double scale_um_per_px);

/// Measure, fit, and move until the fitted radius is below threshold_um or
/// max_iter measurement passes have been made. Non-convergence is reported
/// through `converged`, not thrown.
CorrectionLog correction_loop(VirtualRig& rig, const CorrectionConfig& cfg, const CenterObserver& observer = {});

/// iteration,R_px,offset_x_um,offset_y_um,residual_um
void write_csv(std::ostream& out, const CorrectionLog& log);

}  // namespace axiscal

#endif  // AXISCAL_CORRECTION_HPP
