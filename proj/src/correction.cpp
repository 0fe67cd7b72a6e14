#include "axiscal/correction.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace axiscal {

namespace {

Eigen::Matrix2d rotation(double angle_deg) {
  const double a = angle_deg * std::acos(-1.0) / 180.0;
  Eigen::Matrix2d r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

}  // namespace

CircleFitResult fit_circle(std::span<const Point2> points) {
  const Index n = Index(points.size());
  if (n < 3) throw Error(ErrorCode::TooFewPoints, "fit_circle: need at least 3 points");
  Point2 mean = Point2::Zero();
  for (const auto& p : points) mean += p;
  mean /= double(n);

  // Coincident points: the zero-radius circle fits them exactly.
  double spread = 0.0;
  for (const auto& p : points) spread = std::max(spread, (p - mean).cwiseAbs().maxCoeff());
  if (spread <= 1e-12 * std::max(1.0, mean.cwiseAbs().maxCoeff())) return {mean.x(), mean.y(), 0.0, 0.0};

  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (Index i = 0; i < n; ++i) {
    const Point2 q = points[size_t(i)] - mean;
    a.row(i) << q.x(), q.y(), 1.0;
    b[i] = -q.squaredNorm();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) throw Error(ErrorCode::Degenerate, "fit_circle: points are collinear");
  const Eigen::Vector3d def = qr.solve(b);

  const Point2 center(-def[0] / 2.0, -def[1] / 2.0);
  const double r2 = center.squaredNorm() - def[2];
  if (!(r2 >= 0.0) || !std::isfinite(r2)) throw Error(ErrorCode::Degenerate, "fit_circle: no real circle");

  CircleFitResult fit{center.x() + mean.x(), center.y() + mean.y(), std::sqrt(r2), 0.0};
  double ss = 0.0;
  for (const auto& p : points) {
    const double d = std::hypot(p.x() - fit.cx, p.y() - fit.cy) - fit.r;
    ss += d * d;
  }
  fit.rms_residual = std::sqrt(ss / double(n));
  return fit;
}

void RigState::validate() const {
  if (!(scale_um_per_px > 0.0)) throw Error(ErrorCode::InvalidArgument, "rig: scale must be > 0");
  if (!(obs_noise_px >= 0.0 && act_noise_um >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "rig: noise sigmas must be >= 0");
  if (!ecc_um.allFinite() || !axis_px.allFinite())
    throw Error(ErrorCode::InvalidArgument, "rig: non-finite geometry");
}

VirtualRig::VirtualRig(const RigState& state) : state_(state), rng_(state.seed) { state_.validate(); }

Point2 VirtualRig::true_center(double angle_deg) const {
  return state_.axis_px + rotation(angle_deg) * (state_.ecc_um / state_.scale_um_per_px);
}

Point2 VirtualRig::observe(double angle_deg, const CenterObserver& observer) {
  const Point2 truth = true_center(angle_deg);
  if (observer) return observer(truth);
  if (state_.obs_noise_px == 0.0) return truth;
  std::normal_distribution<double> noise(0.0, state_.obs_noise_px);
  const double nx = noise(rng_);
  const double ny = noise(rng_);
  return truth + Point2(nx, ny);
}

void VirtualRig::apply_move(const Point2& move_um) {
  Point2 error = Point2::Zero();
  if (state_.act_noise_um > 0.0) {
    std::normal_distribution<double> noise(0.0, state_.act_noise_um);
    error.x() = noise(rng_);
    error.y() = noise(rng_);
  }
  state_.ecc_um -= move_um + error;
}

void CorrectionConfig::validate() const {
  if (steps_per_rev < 3) throw Error(ErrorCode::InvalidArgument, "correction: steps_per_rev must be >= 3");
  if (std::abs(steps_per_rev * step_deg - 360.0) > 1e-9)
    throw Error(ErrorCode::InvalidArgument, "correction: steps_per_rev * step_deg must equal 360");
  if (!(threshold_um > 0.0)) throw Error(ErrorCode::InvalidArgument, "correction: threshold must be > 0");
  if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "correction: max_iter must be >= 1");
}

Point2 estimate_eccentricity(std::span<const Point2> points, std::span<const double> angles_deg,
                             const CircleFitResult& fit, double scale_um_per_px) {
  if (points.size() != angles_deg.size() || points.empty())
    throw Error(ErrorCode::ShapeMismatch, "estimate_eccentricity: points and angles differ");
  const Point2 center(fit.cx, fit.cy);
  Point2 acc = Point2::Zero();
  for (std::size_t k = 0; k < points.size(); ++k)
    acc += rotation(-angles_deg[k]) * (points[k] - center);
  return acc * (scale_um_per_px / double(points.size()));
}

CorrectionLog correction_loop(VirtualRig& rig, const CorrectionConfig& cfg, const CenterObserver& observer) {
  cfg.validate();
  CorrectionLog log;
  std::vector<Point2> points(size_t(cfg.steps_per_rev));
  std::vector<double> angles(size_t(cfg.steps_per_rev));
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    for (int k = 0; k < cfg.steps_per_rev; ++k) {
      angles[size_t(k)] = rig.state().spin_deg + k * cfg.step_deg;
      points[size_t(k)] = rig.observe(angles[size_t(k)], observer);
    }
    CorrectionRecord rec;
    rec.iteration = iter;
    rec.fit = fit_circle(points);
    rec.residual_um = rec.fit.r * rig.state().scale_um_per_px;
    rec.true_ecc_um = rig.state().ecc_um;
    if (rec.residual_um < cfg.threshold_um) {
      log.records.push_back(rec);
      log.converged = true;
      break;
    }
    rec.offset_um = estimate_eccentricity(points, angles, rec.fit, rig.state().scale_um_per_px);
    rig.apply_move(rec.offset_um);
    ++log.moves;
    log.records.push_back(rec);
  }
  log.final_ecc_um = rig.state().ecc_um;
  return log;
}

void write_csv(std::ostream& out, const CorrectionLog& log) {
  out << "iteration,R_px,offset_x_um,offset_y_um,residual_um\n";
  const auto old_precision = out.precision(10);
  for (const auto& r : log.records)
    out << r.iteration << ',' << r.fit.r << ',' << r.offset_um.x() << ',' << r.offset_um.y() << ','
        << r.residual_um << '\n';
  out.precision(old_precision);
}

}  // namespace axiscal
