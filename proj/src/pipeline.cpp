#include "axiscal/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <map>
#include <memory>
#include <ostream>
#include <random>

namespace axiscal {

SystemInitResult system_init(const FocusStack& stack, const BlockSearchParams& params, bool concurrent,
                             std::optional<std::size_t> coarse_index) {
  if (stack.images.empty()) throw Error(ErrorCode::EmptyStack, "system_init: empty stack");
  const std::size_t coarse = coarse_index.value_or(stack.images.size() / 2);
  if (coarse >= stack.images.size()) throw Error(ErrorCode::IndexOutOfRange, "system_init: coarse index");

  auto acquire = [&] { return bdma(stack.images[coarse], params).head().roi; };
  if (!concurrent) {
    const Roi roi = acquire();
    return {roi, afa_best_focus(stack, roi)};
  }

  std::promise<Roi> roi_promise;
  std::shared_future<Roi> roi_ready = roi_promise.get_future().share();
  auto focus = std::async(std::launch::async, [&stack, roi_ready] { return afa_best_focus(stack, roi_ready.get()); });
  try {
    roi_promise.set_value(acquire());
  } catch (...) {
    roi_promise.set_exception(std::current_exception());
  }
  const std::size_t best = focus.get();  // rethrows an acquisition failure
  return {roi_ready.get(), best};
}

const char* to_string(AeaPath path) {
  switch (path) {
    case AeaPath::Direct: return "direct";
    case AeaPath::MdcNet: return "mdcnet";
    case AeaPath::Gfa: return "gfa";
  }
  return "unknown";
}

void AeaConfig::validate() const {
  if (!(thr_mdc > 0.0 && thr_mdc < thr_direct))
    throw Error(ErrorCode::InvalidArgument, "aea: need 0 < thr_mdc < thr_direct");
  dehaze.validate();
}

AeaPath aea_route(double smd2_value, double thr_direct, double thr_mdc) {
  if (smd2_value > thr_direct) return AeaPath::Direct;
  if (smd2_value > thr_mdc) return AeaPath::MdcNet;
  return AeaPath::Gfa;
}

AeaResult aea_dispatch(const GrayImage& roi_img, const AeaConfig& cfg) {
  cfg.validate();
  AeaResult out;
  out.smd2_before = smd2(roi_img);
  out.path = aea_route(out.smd2_before, cfg.thr_direct, cfg.thr_mdc);
  switch (out.path) {
    case AeaPath::Direct:
      out.enhanced = roi_img;
      break;
    case AeaPath::MdcNet:
      if (!cfg.weights) throw Error(ErrorCode::MissingWeights, "aea: MDC-Net path selected without weights");
      out.enhanced = mdcnet_enhance(*cfg.weights, roi_img, cfg.b_const);
      break;
    case AeaPath::Gfa:
      out.enhanced = gfa_enhance(roi_img, cfg.dehaze);
      break;
  }
  return out;
}

Point2 extract_center(const GrayImage& roi_img, const Roi& roi, const ThresholdParams& thr, int se_size) {
  const Circle c = largest_inscribed_circle(erode(adaptive_gaussian_threshold(roi_img, thr), se_size));
  return {c.cx + double(roi.x0), c.cy + double(roi.y0)};
}

CenterObserver full_image_observer(const FullImageSpec& spec, const Point2& axis_px) {
  if (spec.frame_w < spec.blocks.block_w || spec.frame_h < spec.blocks.block_h)
    throw Error(ErrorCode::InvalidArgument, "full-image observer: frame smaller than search block");
  spec.aea.validate();
  const Point2 origin(std::floor(axis_px.x() - double(spec.frame_w) / 2.0),
                      std::floor(axis_px.y() - double(spec.frame_h) / 2.0));
  auto counter = std::make_shared<std::uint64_t>(0);
  return [spec, origin, counter](const Point2& truth) {
    SceneSpec scene = spec.scene;
    scene.image_w = spec.frame_w;
    scene.image_h = spec.frame_h;
    scene.cx = truth.x() - origin.x();
    scene.cy = truth.y() - origin.y();
    GrayImage frame = render_crosshair(scene).image;
    if (spec.apply_degrade) {
      DegradeSpec severity = spec.degrade;
      severity.seed = spec.degrade.seed + (*counter)++;
      frame = degrade(frame, severity);
    }
    const Roi roi = bdma(frame, spec.blocks).head().roi;
    const AeaResult enhanced = aea_dispatch(crop(frame, roi), spec.aea);
    return Point2(extract_center(enhanced.enhanced, roi, spec.threshold, spec.se_size) + origin);
  };
}

const char* to_string(BenchMethod method) {
  switch (method) {
    case BenchMethod::MaxMin: return "maxmin";
    case BenchMethod::Gfa: return "gfa";
    case BenchMethod::FastGfa: return "fastgfa";
    case BenchMethod::MdcNet: return "mdcnet";
  }
  return "unknown";
}

std::vector<GrayImage> make_bench_corpus(const std::vector<Index>& scales, std::size_t per_scale,
                                         std::uint64_t seed, const DegradeSpec& severity) {
  std::vector<GrayImage> corpus;
  std::mt19937_64 rng(seed);
  for (Index side : scales) {
    for (std::size_t i = 0; i < per_scale; ++i) {
      std::uniform_real_distribution<double> jitter(0.4 * double(side), 0.6 * double(side));
      SceneSpec scene;
      scene.image_w = scene.image_h = side;
      scene.cx = jitter(rng);
      scene.cy = jitter(rng);
      scene.falloff_radius = 0.75 * double(side);
      DegradeSpec s = severity;
      s.seed = rng();
      corpus.push_back(degrade(render_crosshair(scene).image, s));
    }
  }
  return corpus;
}

namespace {

template <typename Fn>
double median_ms(int repetitions, Fn&& fn) {
  using Clock = std::chrono::steady_clock;
  fn();  // warm-up
  std::vector<double> ms;
  for (int i = 0; i < repetitions; ++i) {
    const auto t0 = Clock::now();
    fn();
    ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  std::sort(ms.begin(), ms.end());
  const std::size_t n = ms.size();
  return n % 2 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
}

}  // namespace

std::vector<BenchRow> bench_report(const std::vector<GrayImage>& corpus, const BenchOptions& opts) {
  if (opts.repetitions < 1) throw Error(ErrorCode::InvalidArgument, "bench: repetitions must be >= 1");
  for (BenchMethod m : opts.methods)
    if (m == BenchMethod::MdcNet && !opts.weights)
      throw Error(ErrorCode::MissingWeights, "bench: MDC-Net rows need weights");
  DehazeParams fast = opts.dehaze;
  fast.subsample_s = opts.fast_subsample;
  fast.validate();

  std::vector<BenchRow> rows;
  for (BenchMethod method : opts.methods) {
    auto run = [&](const GrayImage& img) -> GrayImage {
      switch (method) {
        case BenchMethod::MaxMin: return max_min_stretch(img);
        case BenchMethod::Gfa: return gfa_enhance(img, opts.dehaze);
        case BenchMethod::FastGfa: return gfa_enhance(img, fast);
        case BenchMethod::MdcNet: return mdcnet_enhance(*opts.weights, img, opts.b_const);
      }
      return img;
    };
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const GrayImage& img = corpus[i];
      BenchRow row;
      row.method = to_string(method);
      row.scale = img.cols();
      row.image = i;
      row.smd2_before = smd2(img);
      row.smd2_after = smd2(run(img));
      GrayImage sink;
      row.wall_ms = median_ms(opts.repetitions, [&] { sink = run(img); });
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<BenchSummary> summarize(const std::vector<BenchRow>& rows) {
  std::vector<BenchSummary> out;
  std::map<std::pair<std::string, Index>, std::size_t> slot;
  for (const auto& r : rows) {
    auto [it, inserted] = slot.try_emplace({r.method, r.scale}, out.size());
    if (inserted) out.push_back(BenchSummary{r.method, r.scale});
    BenchSummary& s = out[it->second];
    ++s.count;
    s.mean_smd2_before += r.smd2_before;
    s.mean_smd2_after += r.smd2_after;
    s.mean_ms += r.wall_ms;
  }
  for (auto& s : out) {
    s.mean_smd2_before /= double(s.count);
    s.mean_smd2_after /= double(s.count);
    s.mean_ms /= double(s.count);
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "method,scale,image,smd2_before,smd2_after,wall_ms\n";
  for (const auto& r : rows)
    out << r.method << ',' << r.scale << ',' << r.image << ',' << r.smd2_before << ',' << r.smd2_after << ','
        << r.wall_ms << '\n';
}

void write_csv(std::ostream& out, const std::vector<BenchSummary>& summary) {
  out << "method,scale,count,mean_smd2_before,mean_smd2_after,mean_ms\n";
  for (const auto& s : summary)
    out << s.method << ',' << s.scale << ',' << s.count << ',' << s.mean_smd2_before << ','
        << s.mean_smd2_after << ',' << s.mean_ms << '\n';
}

}  // namespace axiscal
