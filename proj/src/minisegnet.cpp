#include "offroad/minisegnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>

namespace offroad::nn {
namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.data) v = v > 0 ? v : 0.0;
  return y;
}

void relu_backward_inplace(Tensor& grad, const Tensor& pre) {
  for (std::size_t i = 0; i < grad.data.size(); ++i)
    if (!(pre.data[i] > 0)) grad.data[i] = 0.0;
}

void check_pool_match(const Tensor& t, const PoolIndices& idx, bool pooled_side) {
  const int h = pooled_side ? idx.height : idx.in_height;
  const int w = pooled_side ? idx.width : idx.in_width;
  if (t.channels != idx.channels || t.height != h || t.width != w)
    throw Error(Errc::shape, "tensor " + std::to_string(t.channels) + "x" + std::to_string(t.height) + "x" +
                                 std::to_string(t.width) + " does not match pool indices");
  if (idx.index.size() != static_cast<std::size_t>(idx.channels) * idx.height * idx.width)
    throw Error(Errc::shape, "pool index count mismatch");
}

// Every pooled cell's stored index must address its own 2x2 window.
void check_indices_in_window(const PoolIndices& idx) {
  for (int c = 0; c < idx.channels; ++c)
    for (int y = 0; y < idx.height; ++y)
      for (int x = 0; x < idx.width; ++x) {
        const std::uint32_t k = idx.index[(static_cast<std::size_t>(c) * idx.height + y) * idx.width + x];
        const int iy = static_cast<int>(k / idx.in_width);
        const int ix = static_cast<int>(k % idx.in_width);
        if (iy / 2 != y || ix / 2 != x) throw Error(Errc::shape, "pool index outside its window");
      }
}

// Stable float32 <-> little-endian bytes.
void put_f32(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  double f32() { return std::bit_cast<float>(u32()); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw Error(Errc::format, "checkpoint truncated");
  }
  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::pair<Tensor, PoolIndices> maxpool_with_indices(const Tensor& x) {
  if (x.height % 2 || x.width % 2 || x.height == 0 || x.width == 0)
    throw Error(Errc::shape, "maxpool needs even, non-zero spatial dims; got " + std::to_string(x.height) + "x" +
                                 std::to_string(x.width));
  const int oh = x.height / 2;
  const int ow = x.width / 2;
  Tensor out(x.channels, oh, ow);
  PoolIndices idx{x.channels, oh, ow, x.height, x.width, {}};
  idx.index.resize(out.data.size());
  for (int c = 0; c < x.channels; ++c)
    for (int y = 0; y < oh; ++y)
      for (int xo = 0; xo < ow; ++xo) {
        int best_y = 2 * y;
        int best_x = 2 * xo;
        double best = x.at(c, best_y, best_x);
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const double v = x.at(c, 2 * y + dy, 2 * xo + dx);
            if (v > best) {
              best = v;
              best_y = 2 * y + dy;
              best_x = 2 * xo + dx;
            }
          }
        out.at(c, y, xo) = best;
        idx.index[out.index(c, y, xo)] = static_cast<std::uint32_t>(best_y * x.width + best_x);
      }
  return {std::move(out), std::move(idx)};
}

Tensor unpool_with_indices(const Tensor& pooled, const PoolIndices& idx) {
  check_pool_match(pooled, idx, true);
  check_indices_in_window(idx);
  Tensor out(idx.channels, idx.in_height, idx.in_width);
  const std::size_t in_plane = out.plane();
  const std::size_t pooled_plane = pooled.plane();
  for (int c = 0; c < pooled.channels; ++c)
    for (std::size_t i = 0; i < pooled_plane; ++i)
      out.data[c * in_plane + idx.index[c * pooled_plane + i]] = pooled.data[c * pooled_plane + i];
  return out;
}

Tensor maxpool_backward(const Tensor& grad_pooled, const PoolIndices& idx) {
  check_pool_match(grad_pooled, idx, true);
  Tensor out(idx.channels, idx.in_height, idx.in_width);
  const std::size_t in_plane = out.plane();
  const std::size_t pooled_plane = grad_pooled.plane();
  for (int c = 0; c < grad_pooled.channels; ++c)
    for (std::size_t i = 0; i < pooled_plane; ++i)
      out.data[c * in_plane + idx.index[c * pooled_plane + i]] += grad_pooled.data[c * pooled_plane + i];
  return out;
}

Tensor unpool_backward(const Tensor& grad_out, const PoolIndices& idx) {
  check_pool_match(grad_out, idx, false);
  Tensor out(idx.channels, idx.height, idx.width);
  const std::size_t in_plane = grad_out.plane();
  const std::size_t pooled_plane = out.plane();
  for (int c = 0; c < out.channels; ++c)
    for (std::size_t i = 0; i < pooled_plane; ++i)
      out.data[c * pooled_plane + i] = grad_out.data[c * in_plane + idx.index[c * pooled_plane + i]];
  return out;
}

Conv::Conv(int in_ch, int out_ch, int ksize)
    : in(in_ch), out(out_ch), k(ksize), weight(static_cast<std::size_t>(out_ch) * in_ch * ksize * ksize, 0.0),
      bias(static_cast<std::size_t>(out_ch), 0.0) {}

Tensor Conv::forward(const Tensor& x) const {
  if (x.channels != in) throw Error(Errc::shape, "conv expects " + std::to_string(in) + " input channels");
  const int h = x.height;
  const int w = x.width;
  const int pad = k / 2;
  Tensor y(out, h, w);
  for (int o = 0; o < out; ++o) {
    double* dst_plane = y.data.data() + o * y.plane();
    std::fill(dst_plane, dst_plane + y.plane(), bias[o]);
    for (int i = 0; i < in; ++i) {
      const double* src_plane = x.data.data() + i * x.plane();
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const double wv = weight[((static_cast<std::size_t>(o) * in + i) * k + ky) * k + kx];
          const int dy = ky - pad;
          const int dx = kx - pad;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          for (int yy = std::max(0, -dy); yy < std::min(h, h - dy); ++yy) {
            double* __restrict dst = dst_plane + static_cast<std::size_t>(yy) * w;
            const double* __restrict src = src_plane + static_cast<std::size_t>(yy + dy) * w + dx;
            for (int xx = x0; xx < x1; ++xx) dst[xx] += wv * src[xx];
          }
        }
    }
  }
  return y;
}

Tensor Conv::backward(const Tensor& x, const Tensor& grad_out, Conv& grad, bool want_input) const {
  const int h = x.height;
  const int w = x.width;
  const int pad = k / 2;
  Tensor gin;
  if (want_input) gin = Tensor(in, h, w);
  for (int o = 0; o < out; ++o) {
    const double* g_plane = grad_out.data.data() + o * grad_out.plane();
    double bsum = 0.0;
    for (std::size_t j = 0; j < grad_out.plane(); ++j) bsum += g_plane[j];
    grad.bias[o] += bsum;
    for (int i = 0; i < in; ++i) {
      const double* x_plane = x.data.data() + i * x.plane();
      double* gi_plane = want_input ? gin.data.data() + i * gin.plane() : nullptr;
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const std::size_t wi = ((static_cast<std::size_t>(o) * in + i) * k + ky) * k + kx;
          const double wv = weight[wi];
          const int dy = ky - pad;
          const int dx = kx - pad;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          double acc = 0.0;
          for (int yy = std::max(0, -dy); yy < std::min(h, h - dy); ++yy) {
            const double* __restrict g = g_plane + static_cast<std::size_t>(yy) * w;
            const double* __restrict src = x_plane + static_cast<std::size_t>(yy + dy) * w + dx;
            for (int xx = x0; xx < x1; ++xx) acc += g[xx] * src[xx];
            if (gi_plane) {
              double* __restrict dst = gi_plane + static_cast<std::size_t>(yy + dy) * w + dx;
              for (int xx = x0; xx < x1; ++xx) dst[xx] += wv * g[xx];
            }
          }
          grad.weight[wi] += acc;
        }
    }
  }
  return gin;
}

MiniNet MiniNet::zeros(int in_channels) {
  if (in_channels < 1) throw Error(Errc::config, "input channel count must be positive");
  MiniNet net;
  net.in_channels = in_channels;
  net.enc1 = Conv(in_channels, kEnc1, 3);
  net.enc2 = Conv(kEnc1, kEnc2, 3);
  net.dec2 = Conv(kEnc2, kEnc1, 3);
  net.dec1 = Conv(kEnc1, kEnc1, 3);
  net.classifier = Conv(kEnc1, kClasses, 1);
  return net;
}

MiniNet MiniNet::create(int in_channels, std::uint64_t seed) {
  MiniNet net = zeros(in_channels);
  std::mt19937_64 rng(seed);
  for (Conv* c : {&net.enc1, &net.enc2, &net.dec2, &net.dec1, &net.classifier}) {
    const double fan_in = c->in * c->k * c->k;
    const double fan_out = c->out * c->k * c->k;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& w : c->weight) w = (2.0 * uniform01(rng) - 1.0) * limit;
  }
  return net;
}

std::vector<ParamRef> MiniNet::parameters() {
  std::vector<ParamRef> out;
  const std::pair<const char*, Conv*> layers[] = {
      {"enc1", &enc1}, {"enc2", &enc2}, {"dec2", &dec2}, {"dec1", &dec1}, {"classifier", &classifier}};
  for (auto [name, c] : layers) {
    out.push_back({std::string(name) + ".weight", c->weight});
    out.push_back({std::string(name) + ".bias", c->bias});
  }
  return out;
}

std::size_t MiniNet::parameter_count() const {
  std::size_t n = 0;
  for (const Conv* c : {&enc1, &enc2, &dec2, &dec1, &classifier}) n += c->weight.size() + c->bias.size();
  return n;
}

namespace {

struct Activations {
  Tensor x;
  Tensor a1_pre, a1, p1;
  PoolIndices i1;
  Tensor a2_pre, a2, p2;
  PoolIndices i2;
  Tensor u2, a3_pre, a3, u1, a4_pre, a4, logits;
};

Activations run_forward(const MiniNet& net, const Tensor& x) {
  if (x.channels != net.in_channels)
    throw Error(Errc::shape, "network expects " + std::to_string(net.in_channels) + " channels, got " +
                                 std::to_string(x.channels));
  if (x.height % 4 || x.width % 4 || x.height == 0 || x.width == 0)
    throw Error(Errc::shape, "input height and width must be positive multiples of 4");
  Activations a;
  a.x = x;
  a.a1_pre = net.enc1.forward(x);
  a.a1 = relu(a.a1_pre);
  std::tie(a.p1, a.i1) = maxpool_with_indices(a.a1);
  a.a2_pre = net.enc2.forward(a.p1);
  a.a2 = relu(a.a2_pre);
  std::tie(a.p2, a.i2) = maxpool_with_indices(a.a2);
  a.u2 = unpool_with_indices(a.p2, a.i2);
  a.a3_pre = net.dec2.forward(a.u2);
  a.a3 = relu(a.a3_pre);
  a.u1 = unpool_with_indices(a.a3, a.i1);
  a.a4_pre = net.dec1.forward(a.u1);
  a.a4 = relu(a.a4_pre);
  a.logits = net.classifier.forward(a.a4);
  return a;
}

}  // namespace

Tensor forward(const MiniNet& net, const Tensor& x) { return run_forward(net, x).logits; }

double loss_and_gradient(const MiniNet& net, const Tensor& x, const LabelMap& labels, MiniNet* grad) {
  if (labels.width != x.width || labels.height != x.height) throw Error(Errc::shape, "label map size mismatch");
  Activations a = run_forward(net, x);
  const Tensor& z = a.logits;
  const std::size_t plane = z.plane();

  std::size_t counted = 0;
  for (auto l : labels.data)
    if (l < kNumClasses) ++counted;

  Tensor dz(z.channels, z.height, z.width);
  double loss = 0.0;
  for (std::size_t p = 0; p < plane; ++p) {
    const auto l = labels.data[p];
    if (l >= kNumClasses) continue;
    double m = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < z.channels; ++c) m = std::max(m, z.data[c * plane + p]);
    double s = 0.0;
    for (int c = 0; c < z.channels; ++c) s += std::exp(z.data[c * plane + p] - m);
    loss += std::log(s) + m - z.data[l * plane + p];
    for (int c = 0; c < z.channels; ++c) {
      const double prob = std::exp(z.data[c * plane + p] - m) / s;
      dz.data[c * plane + p] = (prob - (c == l ? 1.0 : 0.0)) / static_cast<double>(counted);
    }
  }
  if (counted == 0) {
    if (grad) *grad = MiniNet::zeros(net.in_channels);
    return 0.0;
  }
  loss /= static_cast<double>(counted);
  if (!grad) return loss;

  *grad = MiniNet::zeros(net.in_channels);
  Tensor g = net.classifier.backward(a.a4, dz, grad->classifier);
  relu_backward_inplace(g, a.a4_pre);
  g = net.dec1.backward(a.u1, g, grad->dec1);
  g = unpool_backward(g, a.i1);
  relu_backward_inplace(g, a.a3_pre);
  g = net.dec2.backward(a.u2, g, grad->dec2);
  g = unpool_backward(g, a.i2);
  g = maxpool_backward(g, a.i2);
  relu_backward_inplace(g, a.a2_pre);
  g = net.enc2.backward(a.p1, g, grad->enc2);
  g = maxpool_backward(g, a.i1);
  relu_backward_inplace(g, a.a1_pre);
  net.enc1.backward(a.x, g, grad->enc1, false);
  return loss;
}

LabelMap argmax_labels(const Tensor& logits) {
  if (logits.channels != kNumClasses) throw Error(Errc::shape, "expected six class logits");
  LabelMap out(logits.width, logits.height, 0);
  const std::size_t plane = logits.plane();
  for (std::size_t p = 0; p < plane; ++p) {
    int best = 0;
    for (int c = 1; c < logits.channels; ++c)
      if (logits.data[c * plane + p] > logits.data[best * plane + p]) best = c;
    out.data[p] = static_cast<std::uint8_t>(best);
  }
  return out;
}

LabelMap predict_labels(const MiniNet& net, const Tensor& x) { return argmax_labels(forward(net, x)); }

Tensor to_tensor(const encodings::MultiChannelImage& img) {
  Tensor t(img.channel_count(), img.height, img.width);
  for (int c = 0; c < img.channel_count(); ++c)
    for (std::size_t i = 0; i < t.plane(); ++i) t.data[c * t.plane() + i] = img.planes[c].data[i] / 255.0;
  return t;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0)) throw Error(Errc::config, "learning_rate must be non-negative");
  if (!(momentum >= 0 && momentum < 1)) throw Error(Errc::config, "momentum must be in [0, 1)");
  if (iterations < 0) throw Error(Errc::config, "iterations must be >= 0");
}

TrainResult train(MiniNet net, const std::vector<TrainingSample>& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw Error(Errc::empty_dataset, "no training samples");
  for (const auto& s : data)
    if (s.input.channels != net.in_channels)
      throw Error(Errc::config, "training sample has " + std::to_string(s.input.channels) + " channels, network " +
                                    std::to_string(net.in_channels));

  TrainResult result;
  std::vector<std::vector<double>> velocity;
  for (auto& p : net.parameters()) velocity.emplace_back(p.values.size(), 0.0);

  std::mt19937_64 rng(cfg.seed ^ 0x5452414eull);
  std::vector<std::size_t> order(data.size());
  MiniNet grad;
  for (int it = 0; it < cfg.iterations; ++it) {
    const std::size_t pos = static_cast<std::size_t>(it) % data.size();
    if (pos == 0) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    }
    const auto& sample = data[order[pos]];
    result.loss_curve.push_back(loss_and_gradient(net, sample.input, sample.labels, &grad));
    auto params = net.parameters();
    auto grads = grad.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& v = velocity[k];
      for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = cfg.momentum * v[j] - cfg.learning_rate * grads[k].values[j];
        params[k].values[j] += v[j];
      }
    }
  }
  result.net = std::move(net);
  return result;
}

void save_checkpoint(const MiniNet& net, const std::filesystem::path& path) {
  std::vector<std::uint8_t> out{'O', 'R', 'M', 'N'};
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(net.in_channels));
  MiniNet copy = net;
  const auto params = copy.parameters();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  const Conv* convs[] = {&net.enc1, &net.enc2, &net.dec2, &net.dec1, &net.classifier};
  for (const Conv* c : convs) {
    put_u32(out, 4);
    for (int d : {c->out, c->in, c->k, c->k}) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : c->weight) put_f32(out, v);
    put_u32(out, 1);
    put_u32(out, static_cast<std::uint32_t>(c->out));
    for (double v : c->bias) put_f32(out, v);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::io, "cannot write checkpoint " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

MiniNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::io, "cannot read checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "ORMN", 4) != 0) throw Error(Errc::format, "bad checkpoint magic");
  Reader r(std::vector<std::uint8_t>(bytes.begin() + 4, bytes.end()));
  if (r.u32() != 1) throw Error(Errc::format, "unsupported checkpoint version");
  const auto in_channels = r.u32();
  if (in_channels == 0 || in_channels > 64) throw Error(Errc::format, "implausible input channel count");
  MiniNet net = MiniNet::zeros(static_cast<int>(in_channels));
  auto params = net.parameters();
  if (r.u32() != params.size()) throw Error(Errc::format, "checkpoint tensor count mismatch");
  for (auto& p : params) {
    const auto rank = r.u32();
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) n *= r.u32();
    if (n != p.values.size()) throw Error(Errc::format, "checkpoint shape mismatch for " + p.name);
    for (auto& v : p.values) v = r.f32();
  }
  if (!r.done()) throw Error(Errc::format, "trailing bytes in checkpoint");
  return net;
}

void write_loss_csv(const std::vector<double>& loss, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error(Errc::io, "cannot write " + path.string());
  f << "iteration,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < loss.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i, loss[i]);
    f << buf;
  }
}

}  // namespace offroad::nn
