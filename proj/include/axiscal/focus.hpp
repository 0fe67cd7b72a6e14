#ifndef AXISCAL_FOCUS_HPP
#define AXISCAL_FOCUS_HPP

#include <array>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "axiscal/image.hpp"

namespace axiscal {

enum class MetricKind { SMD2, Tenengrad, Laplacian, SMD, EnergyGradient, Vollath, Entropy, FFTRatio };

inline constexpr std::array<MetricKind, 8> kAllMetrics = {
    MetricKind::SMD2,           MetricKind::Tenengrad, MetricKind::Laplacian, MetricKind::SMD,
    MetricKind::EnergyGradient, MetricKind::Vollath,   MetricKind::Entropy,   MetricKind::FFTRatio};

const char* to_string(MetricKind kind);
std::optional<MetricKind> metric_from_string(const std::string& name);

/// Product-of-differences sharpness on 0-255 scaled samples, normalized by
/// 255 * width * height. Accepts blocks and other array expressions.
template <typename Derived>
double smd2(const Eigen::ArrayBase<Derived>& img) {
  const Index h = img.rows(), w = img.cols();
  if (w < 2 || h < 2) throw Error(ErrorCode::ImageTooSmall, "smd2 needs at least 2x2");
  const auto& a = img.derived();
  const auto here = a.bottomRightCorner(h - 1, w - 1);
  const auto left = a.bottomLeftCorner(h - 1, w - 1);
  const auto up = a.topRightCorner(h - 1, w - 1);
  const double sum = ((here - left).abs() * (here - up).abs()).template cast<double>().sum();
  return 255.0 * sum / double(w * h);
}

/// Raw (unnormalized) sharpness metric of the given kind.
double focus_metric(const GrayImage& img, MetricKind kind);

/// |2 f(n) - f(n-1) - f(n+1)| / 2.
double differential_gradient(std::span<const double> series, std::size_t n);

struct BlockSearchParams {
  Index block_w = 200;
  Index block_h = 200;
  Index step_t = 50;
};

struct ScoredRoi {
  Roi roi;
  double score = 0.0;
};

/// Blocks ordered by score descending, ties by (y0, x0) ascending.
struct RankedBlocks {
  std::vector<ScoredRoi> entries;

  const ScoredRoi& head() const { return entries.front(); }
  std::size_t size() const { return entries.size(); }
};

/// Block origins along one axis: multiples of step, plus a final origin
/// clamped so the last block touches the far edge.
std::vector<Index> block_origins(Index extent, Index block, Index step);

/// Scores every block with SMD2 (in parallel) and ranks them.
RankedBlocks bdma(const GrayImage& img, const BlockSearchParams& params = {}, unsigned threads = 0);

struct FocusStack {
  std::vector<GrayImage> images;
  double axial_step_um = 10.0;
};

/// Index of the image whose ROI has the largest SMD2; ties go to the smaller index.
std::size_t afa_best_focus(const FocusStack& stack, const Roi& roi);

struct MetricCurve {
  MetricKind kind = MetricKind::SMD2;
  std::vector<double> raw;
  std::vector<double> normalized;
  std::size_t argmax = 0;
  std::optional<double> delta;  // differential gradient at the consensus peak
};

struct SensitivityReport {
  std::vector<MetricCurve> curves;
  std::size_t consensus_index = 0;
  std::optional<MetricKind> selected;
};

std::vector<double> min_max_normalize(std::span<const double> values);

/// Consensus peak over the curves' argmaxes, then the curve with the largest
/// differential gradient at that peak among the curves that agree with it.
/// Curves must already carry normalized values.
SensitivityReport rank_sensitivity(std::vector<MetricCurve> curves);

/// Scores the ROI of every stack image with each metric, min-max normalizes
/// per metric and ranks sensitivity at the consensus focus position.
SensitivityReport metric_sensitivity_report(const FocusStack& stack, const Roi& roi,
                                            std::span<const MetricKind> kinds = kAllMetrics);

/// CSV: metric,index,raw,normalized rows plus a closing summary row.
void write_csv(std::ostream& out, const SensitivityReport& report);

}  // namespace axiscal

#endif  // AXISCAL_FOCUS_HPP
