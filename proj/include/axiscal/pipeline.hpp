#ifndef AXISCAL_PIPELINE_HPP
#define AXISCAL_PIPELINE_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "axiscal/correction.hpp"
#include "axiscal/dehaze.hpp"
#include "axiscal/focus.hpp"
#include "axiscal/mdcnet.hpp"
#include "axiscal/optics.hpp"

namespace axiscal {

struct SystemInitResult {
  Roi roi;
  std::size_t best_index = 0;
};

/// ROI acquisition (bdma on the coarse-focus image) and best-focus search
/// over the stack inside that ROI. With `concurrent`, the focus task starts
/// immediately and blocks on the ROI before scoring; results match the
/// sequential path exactly. The coarse image defaults to the middle of the stack.
SystemInitResult system_init(const FocusStack& stack, const BlockSearchParams& params = {},
                             bool concurrent = true, std::optional<std::size_t> coarse_index = std::nullopt);

enum class AeaPath { Direct, MdcNet, Gfa };

const char* to_string(AeaPath path);

struct AeaConfig {
  double thr_direct = 0.5;
  double thr_mdc = 0.1;
  DehazeParams dehaze;
  std::optional<MdcNet> weights;
  double b_const = 1.0;

  void validate() const;
};

/// smd2 > thr_direct: Direct; smd2 > thr_mdc: MdcNet; otherwise Gfa.
AeaPath aea_route(double smd2_value, double thr_direct = 0.5, double thr_mdc = 0.1);

struct AeaResult {
  GrayImage enhanced;
  AeaPath path = AeaPath::Direct;
  double smd2_before = 0.0;
};

/// Routes by SMD2 and enhances. Throws MissingWeights when the MdcNet band is
/// selected without weights.
AeaResult aea_dispatch(const GrayImage& roi_img, const AeaConfig& cfg);

/// Threshold, erode, largest inscribed circle; returns the circle center in
/// global coordinates (ROI offset added).
Point2 extract_center(const GrayImage& roi_img, const Roi& roi, const ThresholdParams& thr = {},
                      int se_size = 3);

/// End-to-end observation: a frame around the spin axis with the crosshair
/// rendered at the true center, degraded, then bdma -> AEA -> extract_center.
struct FullImageSpec {
  Index frame_w = 640;
  Index frame_h = 640;
  SceneSpec scene;      // size and center are overwritten per observation
  DegradeSpec degrade;  // seed advances per observation
  bool apply_degrade = true;
  BlockSearchParams blocks;
  AeaConfig aea;
  ThresholdParams threshold;
  int se_size = 3;
};

/// Observer for correction_loop in full-image mode. The frame is centered on
/// `axis_px`; observations are reproducible given the spec.
CenterObserver full_image_observer(const FullImageSpec& spec, const Point2& axis_px);

enum class BenchMethod { MaxMin, Gfa, FastGfa, MdcNet };

const char* to_string(BenchMethod method);

struct BenchRow {
  std::string method;
  Index scale = 0;
  std::size_t image = 0;
  double smd2_before = 0.0;
  double smd2_after = 0.0;
  double wall_ms = 0.0;  // median over repetitions, warm-up discarded
};

struct BenchOptions {
  std::vector<BenchMethod> methods{BenchMethod::MaxMin, BenchMethod::Gfa, BenchMethod::FastGfa,
                                   BenchMethod::MdcNet};
  int repetitions = 5;
  DehazeParams dehaze;
  int fast_subsample = 2;
  std::optional<MdcNet> weights;
  double b_const = 1.0;
};

/// Square degraded crosshair ROIs, `per_scale` at each side length.
std::vector<GrayImage> make_bench_corpus(const std::vector<Index>& scales, std::size_t per_scale,
                                         std::uint64_t seed, const DegradeSpec& severity = {});

/// One row per (method, image). The MdcNet method requires weights.
std::vector<BenchRow> bench_report(const std::vector<GrayImage>& corpus, const BenchOptions& opts);

struct BenchSummary {
  std::string method;
  Index scale = 0;
  std::size_t count = 0;
  double mean_smd2_before = 0.0;
  double mean_smd2_after = 0.0;
  double mean_ms = 0.0;
};

/// Means per (method, scale), in first-appearance order.
std::vector<BenchSummary> summarize(const std::vector<BenchRow>& rows);

void write_csv(std::ostream& out, const std::vector<BenchRow>& rows);
void write_csv(std::ostream& out, const std::vector<BenchSummary>& summary);

}  // namespace axiscal

#endif  // AXISCAL_PIPELINE_HPP
