#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "offroad/encodings.hpp"
#include "offroad/labels.hpp"

namespace offroad::nn {

/// Channel-major (C, H, W) tensor of doubles.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  std::size_t index(int c, int y, int x) const { return c * plane() + static_cast<std::size_t>(y) * width + x; }
  double& at(int c, int y, int x) { return data[index(c, y, x)]; }
  double at(int c, int y, int x) const { return data[index(c, y, x)]; }
  bool same_shape(const Tensor& o) const { return channels == o.channels && height == o.height && width == o.width; }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Argmax positions of a 2x2/stride-2 max pool: for every pooled cell, the
/// flat in-plane index (y * in_width + x) of the winning input cell.
struct PoolIndices {
  int channels = 0;
  int height = 0;  // pooled dims
  int width = 0;
  int in_height = 0;
  int in_width = 0;
  std::vector<std::uint32_t> index;
};

/// Ties go to the first cell in row-major window order. Odd input
/// dimensions raise Errc::shape.
std::pair<Tensor, PoolIndices> maxpool_with_indices(const Tensor& x);

/// Places each pooled value at its stored position in a zeroed map twice the size.
Tensor unpool_with_indices(const Tensor& pooled, const PoolIndices& idx);

/// Gradient of maxpool: routes each upstream value to its argmax.
Tensor maxpool_backward(const Tensor& grad_pooled, const PoolIndices& idx);

/// Gradient of unpool: gathers the upstream gradient at the stored positions.
Tensor unpool_backward(const Tensor& grad_out, const PoolIndices& idx);

struct Conv {
  int in = 0;
  int out = 0;
  int k = 3;
  std::vector<double> weight;  // [out][in][k][k]
  std::vector<double> bias;    // [out]

  Conv() = default;
  Conv(int in_ch, int out_ch, int ksize);
  Tensor forward(const Tensor& x) const;
  /// Accumulates into grad's weight/bias; returns dL/dx when want_input.
  Tensor backward(const Tensor& x, const Tensor& grad_out, Conv& grad, bool want_input = true) const;
};

struct ParamRef {
  std::string name;
  std::span<double> values;
};

/// Two conv+ReLU+pool encoder stages (16, 32 filters), two mirrored
/// unpool+conv+ReLU decoder stages, and a 1x1 classifier to six logits.
struct MiniNet {
  static constexpr int kEnc1 = 16;
  static constexpr int kEnc2 = 32;
  static constexpr int kClasses = kNumClasses;

  int in_channels = 0;
  Conv enc1, enc2, dec2, dec1, classifier;

  /// Glorot-uniform weights from `seed`, zero biases.
  static MiniNet create(int in_channels, std::uint64_t seed);
  /// Same shapes, every parameter zero.
  static MiniNet zeros(int in_channels);

  std::vector<ParamRef> parameters();
  std::size_t parameter_count() const;
};

Tensor forward(const MiniNet& net, const Tensor& x);

/// Mean softmax cross-entropy over pixels whose label is not ignore. When
/// `grad` is non-null it receives dL/dparams (overwritten, same shapes as net).
double loss_and_gradient(const MiniNet& net, const Tensor& x, const LabelMap& labels, MiniNet* grad);

/// Per-pixel argmax over the class axis, ties to the lowest class id.
LabelMap argmax_labels(const Tensor& logits);
LabelMap predict_labels(const MiniNet& net, const Tensor& x);

/// Bytes scaled to [0, 1].
Tensor to_tensor(const encodings::MultiChannelImage& img);

struct TrainConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;
  int iterations = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainingSample {
  Tensor input;
  LabelMap labels;
};

struct TrainResult {
  MiniNet net;
  std::vector<double> loss_curve;  // loss before the update at each iteration
};

/// SGD with momentum, one whole image per step: v <- momentum * v - lr * g,
/// w <- w + v. Samples are visited in a seeded per-epoch shuffle.
TrainResult train(MiniNet net, const std::vector<TrainingSample>& data, const TrainConfig& cfg);

/// Binary checkpoint: "ORMN", u32 version, u32 input channels, u32 tensor
/// count, then per tensor u32 rank, u32 dims, little-endian float32 values.
void save_checkpoint(const MiniNet& net, const std::filesystem::path& path);
MiniNet load_checkpoint(const std::filesystem::path& path);

void write_loss_csv(const std::vector<double>& loss, const std::filesystem::path& path);

}  // namespace offroad::nn
