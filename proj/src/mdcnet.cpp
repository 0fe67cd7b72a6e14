#include "axiscal/mdcnet.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "axiscal/optics.hpp"

namespace axiscal {

Tensor Tensor::from_image(const GrayImage& img) {
  Tensor t(1, img.rows(), img.cols());
  t.data.row(0) = Eigen::Map<const Eigen::RowVectorXd>(img.data(), img.size());
  return t;
}

GrayImage Tensor::channel(Index c) const {
  GrayImage img(height, width);
  Eigen::Map<Eigen::RowVectorXd>(img.data(), img.size()) = data.row(c);
  return img;
}

namespace detail {

namespace {

struct Tap {
  Index col, dy, dx;
};

template <typename Fn>
void for_each_tap(const ConvLayer& layer, Index h, Index w, Fn&& fn) {
  const int k = layer.kernel;
  const int p = k / 2;
  for (int i = 0; i < layer.in_channels; ++i) {
    for (int ky = 0; ky < k; ++ky) {
      const Index dy = ky - p;
      const Index y_lo = std::max<Index>(0, -dy), y_hi = std::min<Index>(h, h - dy);
      if (y_hi <= y_lo) continue;
      for (int kx = 0; kx < k; ++kx) {
        const Index dx = kx - p;
        const Index x_lo = std::max<Index>(0, -dx), x_hi = std::min<Index>(w, w - dx);
        if (x_hi <= x_lo) continue;
        fn(i, Tap{(i * k + ky) * k + kx, dy, dx}, y_lo, y_hi, x_lo, x_hi - x_lo);
      }
    }
  }
}

}  // namespace

void conv_forward(const Eigen::Ref<const PlaneMatrix>& in, Index h, Index w, const ConvLayer& layer,
                  Eigen::Ref<PlaneMatrix> out) {
  for (int o = 0; o < layer.out_channels; ++o) out.row(o).setConstant(layer.biases[o]);
  for_each_tap(layer, h, w, [&](int i, Tap tap, Index y_lo, Index y_hi, Index x_lo, Index n) {
    for (int o = 0; o < layer.out_channels; ++o) {
      const double wv = layer.weights(o, tap.col);
      for (Index y = y_lo; y < y_hi; ++y)
        out.row(o).segment(y * w + x_lo, n) += wv * in.row(i).segment((y + tap.dy) * w + x_lo + tap.dx, n);
    }
  });
}

void conv_backward(const Eigen::Ref<const PlaneMatrix>& in, Index h, Index w, const ConvLayer& layer,
                   const Eigen::Ref<const PlaneMatrix>& d_out, Eigen::Ref<PlaneMatrix> d_in,
                   ConvLayer& grad) {
  for (int o = 0; o < layer.out_channels; ++o) grad.biases[o] += d_out.row(o).sum();
  for_each_tap(layer, h, w, [&](int i, Tap tap, Index y_lo, Index y_hi, Index x_lo, Index n) {
    for (int o = 0; o < layer.out_channels; ++o) {
      const double wv = layer.weights(o, tap.col);
      double acc = 0.0;
      for (Index y = y_lo; y < y_hi; ++y) {
        const auto g = d_out.row(o).segment(y * w + x_lo, n);
        const Index src = (y + tap.dy) * w + x_lo + tap.dx;
        acc += g.dot(in.row(i).segment(src, n));
        d_in.row(i).segment(src, n) += wv * g;
      }
      grad.weights(o, tap.col) += acc;
    }
  });
}

}  // namespace detail

Tensor conv2d(const Tensor& input, const ConvLayer& layer) {
  if (input.channels != layer.in_channels)
    throw Error(ErrorCode::ShapeMismatch, "conv2d: input channels do not match layer");
  Tensor out(layer.out_channels, input.height, input.width);
  detail::conv_forward(input.data, input.height, input.width, layer, out.data);
  return out;
}

MdcNet::MdcNet() {
  for (int l = 0; l < kLayers; ++l) layers[l] = ConvLayer(kKernel[l], kIn[l], kOut[l]);
}

MdcNet MdcNet::xavier(std::uint64_t seed) {
  MdcNet net;
  std::mt19937_64 rng(seed);
  for (auto& layer : net.layers) {
    const double k2 = double(layer.kernel * layer.kernel);
    const double bound = std::sqrt(6.0 / (k2 * layer.in_channels + k2 * layer.out_channels));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index r = 0; r < layer.weights.rows(); ++r)
      for (Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = dist(rng);
  }
  return net;
}

Index MdcNet::parameter_count() const {
  Index n = 0;
  for (const auto& layer : layers) n += layer.parameter_count();
  return n;
}

Eigen::VectorXd MdcNet::flatten() const {
  Eigen::VectorXd p(parameter_count());
  Index at = 0;
  for (const auto& layer : layers) {
    for (Index r = 0; r < layer.weights.rows(); ++r)
      for (Index c = 0; c < layer.weights.cols(); ++c) p[at++] = layer.weights(r, c);
    for (Index b = 0; b < layer.biases.size(); ++b) p[at++] = layer.biases[b];
  }
  return p;
}

void MdcNet::unflatten(const Eigen::VectorXd& p) {
  if (p.size() != parameter_count())
    throw Error(ErrorCode::ShapeMismatch, "unflatten: wrong parameter count");
  Index at = 0;
  for (auto& layer : layers) {
    for (Index r = 0; r < layer.weights.rows(); ++r)
      for (Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = p[at++];
    for (Index b = 0; b < layer.biases.size(); ++b) layer.biases[b] = p[at++];
  }
}

ModelStats model_stats(const MdcNet& net, Index h, Index w) {
  Index per_pixel = 0, biases = 0;
  for (const auto& layer : net.layers) {
    per_pixel += layer.weights.size();
    biases += layer.biases.size();
  }
  return {net.parameter_count(), per_pixel * h * w, (per_pixel + biases) * h * w};
}

namespace {

// Rows of the concatenated feature matrix read by each layer.
constexpr std::array<int, MdcNet::kLayers> kInputRows = {0, 3, 6, 9, 12};

}  // namespace

ForwardState forward_detailed(const MdcNet& net, const GrayImage& img) {
  if (img.size() == 0) throw Error(ErrorCode::ShapeMismatch, "forward: empty image");
  ForwardState s;
  s.height = img.rows();
  s.width = img.cols();
  const Index hw = img.size();
  s.input = Eigen::Map<const Eigen::RowVectorXd>(img.data(), hw);
  s.features = PlaneMatrix::Zero(12, hw);
  s.f = PlaneMatrix::Zero(1, hw);
  for (int l = 0; l < 4; ++l) {
    auto out = s.features.middleRows(3 * l, 3);
    if (l == 0)
      detail::conv_forward(s.input, s.height, s.width, net.layers[0], out);
    else
      detail::conv_forward(s.features.topRows(kInputRows[l]), s.height, s.width, net.layers[l], out);
    out = out.cwiseMax(0.0);
  }
  detail::conv_forward(s.features, s.height, s.width, net.layers[4], s.f);
  return s;
}

GrayImage forward(const MdcNet& net, const GrayImage& img) {
  const ForwardState s = forward_detailed(net, img);
  GrayImage f(img.rows(), img.cols());
  Eigen::Map<Eigen::RowVectorXd>(f.data(), f.size()) = s.f.row(0);
  return f;
}

GrayImage reconstruct_unclamped(const GrayImage& f, const GrayImage& img, double b_const) {
  if (f.rows() != img.rows() || f.cols() != img.cols())
    throw Error(ErrorCode::ShapeMismatch, "reconstruct: F and image differ in shape");
  return f * img + (b_const - f);  // exact for F = 1, b = 1
}

GrayImage reconstruct(const GrayImage& f, const GrayImage& img, double b_const) {
  return clamp01(reconstruct_unclamped(f, img, b_const));
}

GrayImage mdcnet_enhance(const MdcNet& net, const GrayImage& img, double b_const) {
  return reconstruct(forward(net, img), img, b_const);
}

namespace {

void backward(const MdcNet& net, const ForwardState& s, const PlaneMatrix& d_f, MdcNet& grads) {
  const Index hw = s.input.cols();
  PlaneMatrix d_features = PlaneMatrix::Zero(12, hw);
  detail::conv_backward(s.features, s.height, s.width, net.layers[4], d_f, d_features, grads.layers[4]);
  PlaneMatrix d_pre(3, hw);
  PlaneMatrix d_input = PlaneMatrix::Zero(1, hw);
  for (int l = 3; l >= 0; --l) {
    d_pre = d_features.middleRows(3 * l, 3).cwiseProduct(
        (s.features.middleRows(3 * l, 3).array() > 0.0).cast<double>().matrix());
    if (l == 0)
      detail::conv_backward(s.input, s.height, s.width, net.layers[0], d_pre, d_input, grads.layers[0]);
    else
      detail::conv_backward(s.features.topRows(kInputRows[l]), s.height, s.width, net.layers[l], d_pre,
                            d_features.topRows(kInputRows[l]), grads.layers[l]);
  }
}

}  // namespace

LossAndGradients loss_and_gradients(const MdcNet& net, const std::vector<const DatasetPair*>& batch,
                                    double b_const) {
  if (batch.empty()) throw Error(ErrorCode::EmptyDataset, "loss_and_gradients: empty batch");
  Index total = 0;
  for (const DatasetPair* p : batch) {
    if (p->input.rows() != p->target.rows() || p->input.cols() != p->target.cols())
      throw Error(ErrorCode::ShapeMismatch, "loss_and_gradients: input and target differ in shape");
    total += p->input.size();
  }
  LossAndGradients out;
  double sum = 0.0;
  for (const DatasetPair* p : batch) {
    const ForwardState s = forward_detailed(net, p->input);
    const Eigen::Map<const Eigen::RowVectorXd> target(p->target.data(), p->target.size());
    const Eigen::RowVectorXd in_minus_one = s.input.row(0).array() - 1.0;
    const Eigen::RowVectorXd diff =
        (s.f.row(0).array() * in_minus_one.array() + b_const - target.array()).matrix();
    sum += diff.squaredNorm();
    const PlaneMatrix d_f = (2.0 / double(total)) * diff.cwiseProduct(in_minus_one);
    backward(net, s, d_f, out.gradients);
  }
  out.loss = sum / double(total);
  return out;
}

LossAndGradients loss_and_gradients(const MdcNet& net, const std::vector<DatasetPair>& batch,
                                    double b_const) {
  std::vector<const DatasetPair*> ptrs;
  for (const auto& p : batch) ptrs.push_back(&p);
  return loss_and_gradients(net, ptrs, b_const);
}

GradCheckResult grad_check(const MdcNet& net, const DatasetPair& pair, const GradCheckOptions& opts) {
  const std::vector<const DatasetPair*> batch{&pair};
  const Eigen::VectorXd analytic = loss_and_gradients(net, batch, opts.b_const).gradients.flatten();
  const Eigen::VectorXd base = net.flatten();

  auto probe = [&](Index j, double delta, PlaneMatrix* features) {
    MdcNet moved = net;
    Eigen::VectorXd p = base;
    p[j] += delta;
    moved.unflatten(p);
    const ForwardState s = forward_detailed(moved, pair.input);
    if (features) *features = s.features;
    const Eigen::Map<const Eigen::RowVectorXd> target(pair.target.data(), pair.target.size());
    const Eigen::RowVectorXd j_out = s.f.row(0).array() * (s.input.row(0).array() - 1.0) + opts.b_const;
    return (j_out - target).squaredNorm() / double(target.size());
  };

  const PlaneMatrix base_active = forward_detailed(net, pair.input).features;
  auto same_pattern = [&](const PlaneMatrix& f) {
    return ((f.array() > 0.0) == (base_active.array() > 0.0)).all();
  };

  std::vector<Index> order(static_cast<std::size_t>(base.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::mt19937_64 rng(opts.seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }

  GradCheckResult result;
  for (Index j : order) {
    if (result.checked >= opts.samples) break;
    PlaneMatrix plus_features, minus_features;
    const double up = probe(j, opts.epsilon, &plus_features);
    const double down = probe(j, -opts.epsilon, &minus_features);
    if (opts.skip_kinks && !(same_pattern(plus_features) && same_pattern(minus_features))) {
      ++result.skipped_kinks;
      continue;
    }
    const double numeric = (up - down) / (2.0 * opts.epsilon);
    const double denom = std::max({std::abs(analytic[j]), std::abs(numeric), opts.abs_floor});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic[j] - numeric) / denom);
    ++result.checked;
  }
  return result;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 0");
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (!(lr_start >= lr_end && lr_end > 0.0))
    throw Error(ErrorCode::InvalidArgument, "need lr_start >= lr_end > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorCode::InvalidArgument, "momentum in [0,1)");
}

double cosine_lr(const TrainConfig& cfg, int epoch) {
  if (cfg.epochs <= 0) return cfg.lr_start;
  const double pi = std::acos(-1.0);
  return cfg.lr_end + (cfg.lr_start - cfg.lr_end) * (1.0 + std::cos(pi * epoch / cfg.epochs)) / 2.0;
}

TrainResult train(const MdcNet& net, const std::vector<DatasetPair>& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "train: empty dataset");
  TrainResult result{net, {}, {}};
  Eigen::VectorXd params = net.flatten();
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(params.size());
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::mt19937_64 rng(cfg.seed);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cosine_lr(cfg, epoch);
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(order[i], order[pick(rng)]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch_size));
      std::vector<const DatasetPair*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&data[order[i]]);
      const LossAndGradients lg = loss_and_gradients(result.net, batch, cfg.b_const);
      loss_sum += lg.loss * double(batch.size());
      velocity = cfg.momentum * velocity + lg.gradients.flatten();
      params -= lr * velocity;
      result.net.unflatten(params);
    }
    result.epoch_loss.push_back(loss_sum / double(data.size()));
    result.epoch_lr.push_back(lr);
  }
  return result;
}

std::vector<DatasetPair> build_dataset(const DatasetSpec& spec, std::size_t count, Index roi_size,
                                       const DehazeParams& dehaze) {
  std::vector<DatasetPair> pairs;
  if (count == 0) return pairs;
  if (roi_size < 17) throw Error(ErrorCode::InvalidArgument, "build_dataset: roi_size must be >= 17");
  std::mt19937_64 rng(spec.seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const Index side = std::max<Index>(roi_size, Index(std::lround(double(roi_size) * spec.scene_scale)));
  const double margin = std::max(1.0, spec.center_margin * double(roi_size));

  for (std::size_t n = 0; n < count; ++n) {
    SceneSpec scene;
    scene.image_w = scene.image_h = side;
    scene.cx = uniform(0.25 * double(side), 0.75 * double(side));
    scene.cy = uniform(0.25 * double(side), 0.75 * double(side));
    scene.line_sigma = uniform(spec.line_sigma_min, spec.line_sigma_max);
    scene.falloff_radius = double(side);
    DegradeSpec severity;
    severity.t_value = uniform(spec.t_min, spec.t_max);
    severity.a_value = uniform(spec.a_min, spec.a_max);
    severity.psf_sigma = uniform(spec.psf_min, spec.psf_max);
    severity.noise_sigma = uniform(spec.noise_min, spec.noise_max);
    severity.seed = rng();
    const GrayImage degraded = degrade(render_crosshair(scene).image, severity);

    // random origin in the central area, then shifted until the ROI holds the center
    auto place = [&](double center) {
      const Index max_origin = side - roi_size;
      Index o = Index(std::floor(uniform(0.0, double(max_origin) + 1.0)));
      const Index lo = Index(std::ceil(center + margin)) - roi_size + 1;
      const Index hi = Index(std::floor(center - margin));
      o = std::clamp(o, std::max<Index>(0, lo), std::min(max_origin, hi));
      return o;
    };
    DatasetPair pair;
    pair.roi = Roi{place(scene.cx), place(scene.cy), roi_size, roi_size};
    pair.cx = scene.cx - double(pair.roi.x0);
    pair.cy = scene.cy - double(pair.roi.y0);
    pair.input = crop(degraded, pair.roi);
    pair.target = gfa_enhance(pair.input, dehaze);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

namespace {

constexpr const char* kFormat = "axiscal.mdcnet";
constexpr int kVersion = 1;
constexpr std::array<const char*, MdcNet::kLayers> kNames = {"conv1", "conv2", "conv3", "conv4", "conv5"};

}  // namespace

std::string serialize_weights(const MdcNet& net, double b_const) {
  nlohmann::json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["b_const"] = b_const;
  doc["weight_order"] = "out,in,ky,kx";
  doc["layers"] = nlohmann::json::array();
  for (int l = 0; l < MdcNet::kLayers; ++l) {
    const ConvLayer& layer = net.layers[l];
    nlohmann::json entry;
    entry["name"] = kNames[l];
    entry["kernel"] = layer.kernel;
    entry["in"] = layer.in_channels;
    entry["out"] = layer.out_channels;
    entry["activation"] = l < 4 ? "relu" : "linear";
    std::vector<double> w;
    for (Index r = 0; r < layer.weights.rows(); ++r)
      for (Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
    entry["weights"] = w;
    entry["biases"] = std::vector<double>(layer.biases.data(), layer.biases.data() + layer.biases.size());
    doc["layers"].push_back(entry);
  }
  return doc.dump(1);
}

MdcNet parse_weights(const std::string& json_text, double* b_const) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("weights: ") + e.what());
  }
  if (doc.value("format", "") != kFormat) throw Error(ErrorCode::FormatError, "weights: unknown format");
  if (doc.value("version", 0) != kVersion) throw Error(ErrorCode::FormatError, "weights: unsupported version");
  if (!doc.contains("layers") || !doc["layers"].is_array() || doc["layers"].size() != MdcNet::kLayers)
    throw Error(ErrorCode::FormatError, "weights: expected five layers");
  MdcNet net;
  try {
    for (int l = 0; l < MdcNet::kLayers; ++l) {
      const auto& entry = doc["layers"][std::size_t(l)];
      ConvLayer& layer = net.layers[l];
      if (entry.at("kernel").get<int>() != layer.kernel || entry.at("in").get<int>() != layer.in_channels ||
          entry.at("out").get<int>() != layer.out_channels)
        throw Error(ErrorCode::FormatError, std::string("weights: topology mismatch in ") + kNames[l]);
      const auto w = entry.at("weights").get<std::vector<double>>();
      const auto b = entry.at("biases").get<std::vector<double>>();
      if (Index(w.size()) != layer.weights.size() || Index(b.size()) != layer.biases.size())
        throw Error(ErrorCode::FormatError, std::string("weights: wrong array length in ") + kNames[l]);
      std::size_t at = 0;
      for (Index r = 0; r < layer.weights.rows(); ++r)
        for (Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = w[at++];
      for (Index i = 0; i < layer.biases.size(); ++i) layer.biases[i] = b[std::size_t(i)];
    }
    if (b_const) *b_const = doc.value("b_const", 1.0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("weights: ") + e.what());
  }
  return net;
}

void save_weights(const std::string& path, const MdcNet& net, double b_const) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << serialize_weights(net, b_const) << '\n';
}

MdcNet load_weights(const std::string& path, double* b_const) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_weights(buf.str(), b_const);
}

}  // namespace axiscal
