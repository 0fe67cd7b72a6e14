#ifndef AXISCAL_MDCNET_HPP
#define AXISCAL_MDCNET_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "axiscal/dehaze.hpp"
#include "axiscal/image.hpp"

namespace axiscal {

/// Feature planes, one row per channel, each row a row-major h*w plane.
using PlaneMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Tensor {
  Index channels = 0;
  Index height = 0;
  Index width = 0;
  PlaneMatrix data;  // channels x (height*width)

  Tensor() = default;
  Tensor(Index c, Index h, Index w) : channels(c), height(h), width(w), data(PlaneMatrix::Zero(c, h * w)) {}

  static Tensor from_image(const GrayImage& img);
  GrayImage channel(Index c) const;
};

/// Square zero-padded convolution. Weight column index for input channel i
/// and tap (ky, kx) is (i*k + ky)*k + kx.
struct ConvLayer {
  int kernel = 1;
  int in_channels = 1;
  int out_channels = 1;
  Eigen::MatrixXd weights;  // out x (in*k*k)
  Eigen::VectorXd biases;   // out

  ConvLayer() = default;
  ConvLayer(int k, int in, int out)
      : kernel(k), in_channels(in), out_channels(out),
        weights(Eigen::MatrixXd::Zero(out, in * k * k)), biases(Eigen::VectorXd::Zero(out)) {}

  Index parameter_count() const { return weights.size() + biases.size(); }
};

namespace detail {

// out = bias + correlate(in, layer); in has layer.in_channels rows.
void conv_forward(const Eigen::Ref<const PlaneMatrix>& in, Index h, Index w, const ConvLayer& layer,
                  Eigen::Ref<PlaneMatrix> out);

// Accumulates input, weight and bias gradients for upstream gradient d_out.
void conv_backward(const Eigen::Ref<const PlaneMatrix>& in, Index h, Index w, const ConvLayer& layer,
                   const Eigen::Ref<const PlaneMatrix>& d_out, Eigen::Ref<PlaneMatrix> d_in,
                   ConvLayer& grad);

}  // namespace detail

/// Same-size cross-correlation plus per-channel bias.
Tensor conv2d(const Tensor& input, const ConvLayer& layer);

/// Five-layer densely connected network predicting F(x,y):
///   conv1 1x1 1->3, conv2 3x3 3->3, conv3 5x5 6->3 (conv1|conv2),
///   conv4 7x7 9->3 (conv1..conv3), conv5 3x3 12->1 (conv1..conv4).
/// ReLU follows conv1..conv4; conv5 is linear.
class MdcNet {
 public:
  static constexpr int kLayers = 5;
  static constexpr std::array<int, kLayers> kKernel = {1, 3, 5, 7, 3};
  static constexpr std::array<int, kLayers> kIn = {1, 3, 6, 9, 12};
  static constexpr std::array<int, kLayers> kOut = {3, 3, 3, 3, 1};

  /// All weights and biases zero.
  MdcNet();

  /// Uniform in +-sqrt(6 / (fan_in + fan_out)) per layer, biases zero.
  static MdcNet xavier(std::uint64_t seed);

  std::array<ConvLayer, kLayers> layers;

  Index parameter_count() const;

  /// Layer by layer: weights (row-major, out x in*k*k) then biases.
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& params);
};

struct ModelStats {
  Index param_count = 0;
  Index macs = 0;           // weight multiply-accumulates
  Index ops_with_bias = 0;  // macs plus one bias add per output sample
};

/// Parameter count and operation counts for an h x w input.
ModelStats model_stats(const MdcNet& net, Index h, Index w);

/// Activations kept for backprop: the 12 concatenated post-ReLU channels and F.
struct ForwardState {
  Index height = 0;
  Index width = 0;
  PlaneMatrix input;     // 1 x hw
  PlaneMatrix features;  // 12 x hw
  PlaneMatrix f;         // 1 x hw
};

ForwardState forward_detailed(const MdcNet& net, const GrayImage& img);

/// F(x,y) for the given image.
GrayImage forward(const MdcNet& net, const GrayImage& img);

/// J = F*I - F + b, clamped to [0,1].
GrayImage reconstruct(const GrayImage& f, const GrayImage& img, double b_const = 1.0);
GrayImage reconstruct_unclamped(const GrayImage& f, const GrayImage& img, double b_const = 1.0);

/// forward + reconstruct.
GrayImage mdcnet_enhance(const MdcNet& net, const GrayImage& img, double b_const = 1.0);

struct DatasetPair {
  GrayImage input;   // degraded ROI
  GrayImage target;  // GFA-enhanced ROI
  Roi roi;           // ROI within the generated scene
  double cx = 0.0;   // ground-truth center in ROI coordinates
  double cy = 0.0;
};

struct LossAndGradients {
  double loss = 0.0;
  MdcNet gradients;
};

/// Mean squared error over all pixels and batch items between the
/// (unclamped) reconstruction and the targets, with exact gradients.
LossAndGradients loss_and_gradients(const MdcNet& net, const std::vector<const DatasetPair*>& batch,
                                    double b_const = 1.0);
LossAndGradients loss_and_gradients(const MdcNet& net, const std::vector<DatasetPair>& batch,
                                    double b_const = 1.0);

struct GradCheckResult {
  double max_relative_error = 0.0;
  int checked = 0;
  int skipped_kinks = 0;
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  int samples = 200;
  std::uint64_t seed = 7;
  double b_const = 1.0;
  /// Redraw parameters whose +-epsilon probes flip a ReLU, where central
  /// differences are not a derivative estimate.
  bool skip_kinks = true;
  /// Denominator floor of the relative error. Components smaller than this
  /// sit at the roundoff level of a central difference and are compared in
  /// absolute terms.
  double abs_floor = 1e-6;
};

/// Central-difference check of loss_and_gradients on randomly drawn
/// parameters; relative error uses max(|analytic|, |numeric|, 1e-8).
GradCheckResult grad_check(const MdcNet& net, const DatasetPair& pair, const GradCheckOptions& opts = {});

struct TrainConfig {
  int epochs = 200;
  int batch_size = 20;
  double lr_start = 4e-4;
  double lr_end = 1e-5;
  double momentum = 0.99;
  double b_const = 1.0;
  std::uint64_t seed = 42;

  void validate() const;
};

/// lr_end + (lr_start - lr_end) * (1 + cos(pi * epoch / epochs)) / 2.
double cosine_lr(const TrainConfig& cfg, int epoch);

struct TrainResult {
  MdcNet net;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_lr;
};

/// SGD with momentum (v = mu v + g; w -= lr v), seeded shuffling, partial
/// last batch kept. Single-threaded and reproducible per seed.
TrainResult train(const MdcNet& net, const std::vector<DatasetPair>& data, const TrainConfig& cfg);

/// Randomized defocused crosshair scenes for dataset construction.
struct DatasetSpec {
  double scene_scale = 2.0;  // scene side = roi_size * scene_scale
  double t_min = 0.2, t_max = 0.45;
  double a_min = 0.7, a_max = 0.9;
  double psf_min = 1.5, psf_max = 3.5;
  double noise_min = 0.002, noise_max = 0.006;
  double line_sigma_min = 1.5, line_sigma_max = 3.0;
  double center_margin = 0.1;  // min distance of the center from the ROI edge, fraction of roi_size
  std::uint64_t seed = 1;
};

/// Cuts `count` ROIs containing the ground-truth center out of simulated
/// defocused scenes and pairs each with its GFA enhancement.
std::vector<DatasetPair> build_dataset(const DatasetSpec& spec, std::size_t count, Index roi_size,
                                       const DehazeParams& dehaze = {});

/// Versioned JSON weights document.
std::string serialize_weights(const MdcNet& net, double b_const = 1.0);
MdcNet parse_weights(const std::string& json_text, double* b_const = nullptr);
void save_weights(const std::string& path, const MdcNet& net, double b_const = 1.0);
MdcNet load_weights(const std::string& path, double* b_const = nullptr);

}  // namespace axiscal

#endif  // AXISCAL_MDCNET_HPP
