#include "axiscal/focus.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>

#include "axiscal/parallel.hpp"

namespace axiscal {

const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::SMD2: return "SMD2";
    case MetricKind::Tenengrad: return "Tenengrad";
    case MetricKind::Laplacian: return "Laplacian";
    case MetricKind::SMD: return "SMD";
    case MetricKind::EnergyGradient: return "EnergyGradient";
    case MetricKind::Vollath: return "Vollath";
    case MetricKind::Entropy: return "Entropy";
    case MetricKind::FFTRatio: return "FFTRatio";
  }
  return "Unknown";
}

std::optional<MetricKind> metric_from_string(const std::string& name) {
  for (MetricKind k : kAllMetrics)
    if (name == to_string(k)) return k;
  return std::nullopt;
}

namespace {

void require_size(const GrayImage& img, Index min_w, Index min_h, MetricKind kind) {
  if (img.cols() < min_w || img.rows() < min_h)
    throw Error(ErrorCode::ImageTooSmall, std::string(to_string(kind)) + ": image too small");
}

double tenengrad(const GrayImage& f) {
  const Index h = f.rows(), w = f.cols();
  double sum = 0.0;
  for (Index y = 1; y < h - 1; ++y) {
    for (Index x = 1; x < w - 1; ++x) {
      const double gx = (f(y - 1, x + 1) + 2 * f(y, x + 1) + f(y + 1, x + 1)) -
                        (f(y - 1, x - 1) + 2 * f(y, x - 1) + f(y + 1, x - 1));
      const double gy = (f(y + 1, x - 1) + 2 * f(y + 1, x) + f(y + 1, x + 1)) -
                        (f(y - 1, x - 1) + 2 * f(y - 1, x) + f(y - 1, x + 1));
      const double g2 = gx * gx + gy * gy;
      if (g2 > 0.0) sum += g2;
    }
  }
  return sum;
}

double laplacian_energy(const GrayImage& f) {
  const Index h = f.rows(), w = f.cols();
  const auto c = f.block(1, 1, h - 2, w - 2);
  const auto lap = f.block(0, 1, h - 2, w - 2) + f.block(2, 1, h - 2, w - 2) +
                   f.block(1, 0, h - 2, w - 2) + f.block(1, 2, h - 2, w - 2) - 4.0 * c;
  return lap.square().sum();
}

double smd(const GrayImage& f) {
  const Index h = f.rows(), w = f.cols();
  return (f.rightCols(w - 1) - f.leftCols(w - 1)).abs().sum() +
         (f.bottomRows(h - 1) - f.topRows(h - 1)).abs().sum();
}

double energy_gradient(const GrayImage& f) {
  const Index h = f.rows(), w = f.cols();
  const auto base = f.topLeftCorner(h - 1, w - 1);
  const auto dx = f.topRightCorner(h - 1, w - 1) - base;
  const auto dy = f.bottomLeftCorner(h - 1, w - 1) - base;
  return (dx.square() + dy.square()).sum();
}

double vollath(const GrayImage& f) {
  const Index w = f.cols();
  return (f.leftCols(w - 1) * f.rightCols(w - 1)).sum() -
         (f.leftCols(w - 2) * f.rightCols(w - 2)).sum();
}

double entropy(const GrayImage& f) {
  std::array<double, 256> hist{};
  for (Index i = 0; i < f.size(); ++i) {
    const long bin = std::lround(std::clamp(f.data()[i], 0.0, 1.0) * 255.0);
    hist[size_t(bin)] += 1.0;
  }
  const double n = double(f.size());
  double e = 0.0;
  for (double c : hist) {
    if (c <= 0.0) continue;
    const double p = c / n;
    e -= p * std::log2(p);
  }
  return e;
}

double fft_ratio(const GrayImage& f) {
  const Index h = f.rows(), w = f.cols();
  Eigen::FFT<double> fft;
  using Cplx = std::complex<double>;
  Eigen::Matrix<Cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> spec(h, w);
  std::vector<Cplx> in, out;
  for (Index y = 0; y < h; ++y) {
    in.assign(size_t(w), Cplx{});
    for (Index x = 0; x < w; ++x) in[size_t(x)] = f(y, x);
    fft.fwd(out, in);
    for (Index x = 0; x < w; ++x) spec(y, x) = out[size_t(x)];
  }
  for (Index x = 0; x < w; ++x) {
    in.resize(size_t(h));
    for (Index y = 0; y < h; ++y) in[size_t(y)] = spec(y, x);
    fft.fwd(out, in);
    for (Index y = 0; y < h; ++y) spec(y, x) = out[size_t(y)];
  }
  const double cutoff = double(w) / 8.0;
  double total = 0.0, high = 0.0;
  for (Index v = 0; v < h; ++v) {
    const double fv = v <= h / 2 ? double(v) : double(v - h);
    for (Index u = 0; u < w; ++u) {
      const double fu = u <= w / 2 ? double(u) : double(u - w);
      const double e = std::norm(spec(v, u));
      total += e;
      if (std::hypot(fu, fv) > cutoff) high += e;
    }
  }
  return total > 0.0 ? high / total : 0.0;
}

}  // namespace

double focus_metric(const GrayImage& img, MetricKind kind) {
  switch (kind) {
    case MetricKind::SMD2: return smd2(img);
    case MetricKind::Tenengrad: require_size(img, 3, 3, kind); return tenengrad(img);
    case MetricKind::Laplacian: require_size(img, 3, 3, kind); return laplacian_energy(img);
    case MetricKind::SMD: require_size(img, 2, 2, kind); return smd(img);
    case MetricKind::EnergyGradient: require_size(img, 2, 2, kind); return energy_gradient(img);
    case MetricKind::Vollath: require_size(img, 3, 1, kind); return vollath(img);
    case MetricKind::Entropy: require_size(img, 1, 1, kind); return entropy(img);
    case MetricKind::FFTRatio: require_size(img, 2, 2, kind); return fft_ratio(img);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown metric");
}

double differential_gradient(std::span<const double> series, std::size_t n) {
  if (n < 1 || n + 1 >= series.size())
    throw Error(ErrorCode::IndexOutOfRange, "differential_gradient needs 1 <= n <= len-2");
  return std::abs(2.0 * series[n] - series[n - 1] - series[n + 1]) / 2.0;
}

std::vector<Index> block_origins(Index extent, Index block, Index step) {
  std::vector<Index> origins;
  for (Index o = 0; o + block <= extent; o += step) origins.push_back(o);
  if (origins.back() + block < extent) origins.push_back(extent - block);
  return origins;
}

RankedBlocks bdma(const GrayImage& img, const BlockSearchParams& params, unsigned threads) {
  if (params.step_t < 1) throw Error(ErrorCode::InvalidArgument, "bdma: step must be >= 1");
  if (params.block_w < 2 || params.block_h < 2)
    throw Error(ErrorCode::InvalidArgument, "bdma: block must be at least 2x2");
  if (img.cols() < params.block_w || img.rows() < params.block_h)
    throw Error(ErrorCode::ImageTooSmall, "bdma: image smaller than block");

  const auto xs = block_origins(img.cols(), params.block_w, params.step_t);
  const auto ys = block_origins(img.rows(), params.block_h, params.step_t);
  RankedBlocks ranked;
  ranked.entries.resize(xs.size() * ys.size());
  parallel_for(
      ranked.entries.size(),
      [&](std::size_t i) {
        const Roi roi{xs[i % xs.size()], ys[i / xs.size()], params.block_w, params.block_h};
        ranked.entries[i] = {roi, smd2(img.block(roi.y0, roi.x0, roi.height, roi.width))};
      },
      threads);
  std::sort(ranked.entries.begin(), ranked.entries.end(), [](const ScoredRoi& a, const ScoredRoi& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.roi.y0 != b.roi.y0) return a.roi.y0 < b.roi.y0;
    return a.roi.x0 < b.roi.x0;
  });
  return ranked;
}

std::size_t afa_best_focus(const FocusStack& stack, const Roi& roi) {
  if (stack.images.empty()) throw Error(ErrorCode::EmptyStack, "afa_best_focus: empty stack");
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < stack.images.size(); ++i) {
    const GrayImage& img = stack.images[i];
    if (!roi.fits(img.cols(), img.rows()))
      throw Error(ErrorCode::InvalidArgument, "afa_best_focus: ROI outside stack image");
    const double s = smd2(img.block(roi.y0, roi.x0, roi.height, roi.width));
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return best;
}

std::vector<double> min_max_normalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (range <= 0.0) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
  return out;
}

SensitivityReport rank_sensitivity(std::vector<MetricCurve> curves) {
  SensitivityReport report;
  std::map<std::size_t, int> votes;
  for (auto& c : curves) {
    const auto it = std::max_element(c.normalized.begin(), c.normalized.end());
    c.argmax = std::size_t(it - c.normalized.begin());
    ++votes[c.argmax];
  }
  int top = 0;
  for (const auto& [index, count] : votes) {
    if (count > top) {
      top = count;
      report.consensus_index = index;
    }
  }
  double best = -1.0;
  for (auto& c : curves) {
    const std::size_t n = report.consensus_index;
    if (c.argmax != n || n < 1 || n + 1 >= c.normalized.size()) continue;
    c.delta = differential_gradient(c.normalized, n);
    if (*c.delta > best) {
      best = *c.delta;
      report.selected = c.kind;
    }
  }
  report.curves = std::move(curves);
  return report;
}

SensitivityReport metric_sensitivity_report(const FocusStack& stack, const Roi& roi,
                                            std::span<const MetricKind> kinds) {
  if (stack.images.empty()) throw Error(ErrorCode::EmptyStack, "metric report: empty stack");
  if (stack.images.size() < 3)
    throw Error(ErrorCode::EmptyStack, "metric report: need at least 3 stack images");
  std::vector<GrayImage> rois;
  rois.reserve(stack.images.size());
  for (const auto& img : stack.images) rois.push_back(crop(img, roi));

  std::vector<MetricCurve> curves;
  for (MetricKind kind : kinds) {
    MetricCurve c;
    c.kind = kind;
    for (const auto& r : rois) c.raw.push_back(focus_metric(r, kind));
    c.normalized = min_max_normalize(c.raw);
    curves.push_back(std::move(c));
  }
  return rank_sensitivity(std::move(curves));
}

void write_csv(std::ostream& out, const SensitivityReport& report) {
  out << "metric,index,raw,normalized\n";
  out.precision(10);
  for (const auto& c : report.curves)
    for (std::size_t i = 0; i < c.normalized.size(); ++i)
      out << to_string(c.kind) << ',' << i << ',' << (i < c.raw.size() ? c.raw[i] : 0.0) << ','
          << c.normalized[i] << '\n';
  out << "selected," << report.consensus_index << ','
      << (report.selected ? to_string(*report.selected) : "none") << ',';
  for (const auto& c : report.curves)
    if (report.selected && c.kind == *report.selected && c.delta) out << *c.delta;
  out << '\n';
}

}  // namespace axiscal
