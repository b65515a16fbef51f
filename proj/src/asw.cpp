#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <thread>

#include "offroad/stereo.hpp"

namespace offroad::stereo {

void AswParams::validate() const {
  if (window_radius < 1) throw Error(Errc::config, "asw: window_radius must be >= 1");
  if (!(gamma_color > 0) || !(gamma_spatial > 0)) throw Error(Errc::config, "asw: gammas must be > 0");
  if (d_min < 1 || d_max < d_min) throw Error(Errc::config, "asw: need 1 <= d_min <= d_max");
  if (cost_truncation < 1) throw Error(Errc::config, "asw: cost_truncation must be >= 1");
  if (uniqueness_ratio >= 100) throw Error(Errc::config, "asw: uniqueness_ratio must be < 100");
}

double asw_support_weight(double delta_color, double delta_spatial, const AswParams& params) {
  return std::exp(-(delta_color / params.gamma_color + delta_spatial / params.gamma_spatial));
}

namespace {

// Accumulates the support-weighted cost for one output row. For a fixed
// window offset (dy, dx) the left weight depends only on x and the right
// weight only on x - d, so both are tabulated once per offset and the
// inner loop over x runs contiguously for every disparity.
class RowAggregator {
 public:
  RowAggregator(const GrayImage& left, const GrayImage& right, const AswParams& p,
                const std::vector<float>& raw, int padded_width)
      : left_(left), right_(right), p_(p), raw_(raw), pw_(padded_width), nd_(p.d_max - p.d_min + 1) {
    for (int k = 0; k < 256; ++k) color_lut_[k] = static_cast<float>(std::exp(-k / p.gamma_color));
    const int r = p.window_radius;
    spatial_.resize(static_cast<std::size_t>(2 * r + 1) * (2 * r + 1));
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        const float s = static_cast<float>(std::exp(-std::sqrt(double(dx * dx + dy * dy)) / p.gamma_spatial));
        spatial_[static_cast<std::size_t>(dy + r) * (2 * r + 1) + (dx + r)] = s * s;
      }
    const std::size_t w = static_cast<std::size_t>(left.width);
    num_.resize(w * nd_);
    den_.resize(w * nd_);
    wl_.resize(w);
    wr_.resize(w);
  }

  void run(int y, CostVolume<float>& out) {
    const int w = left_.width;
    const int h = left_.height;
    const int r = p_.window_radius;
    std::fill(num_.begin(), num_.end(), 0.0f);
    std::fill(den_.begin(), den_.end(), 0.0f);

    for (int dy = -r; dy <= r; ++dy) {
      const int qy = y + dy;
      if (qy < 0 || qy >= h) continue;
      const auto lrow = left_.row(y);
      const auto lq = left_.row(qy);
      const auto rrow = right_.row(y);
      const auto rq = right_.row(qy);
      for (int dx = -r; dx <= r; ++dx) {
        const float s = spatial_[static_cast<std::size_t>(dy + r) * (2 * r + 1) + (dx + r)];
        for (int x = 0; x < w; ++x) {
          const int qx = x + dx;
          const bool inside = qx >= 0 && qx < w;
          wl_[x] = inside ? s * color_lut_[std::abs(lrow[x] - lq[qx])] : 0.0f;
          wr_[x] = inside ? color_lut_[std::abs(rrow[x] - rq[qx])] : 0.0f;
        }
        for (int di = 0; di < nd_; ++di) {
          const int d = p_.d_min + di;
          if (d >= w) break;
          // raw_ rows are padded by r so x + dx never leaves the buffer.
          const float* __restrict c = raw_.data() + (static_cast<std::size_t>(qy) * nd_ + di) * pw_ + r + dx;
          float* __restrict num = num_.data() + static_cast<std::size_t>(di) * w;
          float* __restrict den = den_.data() + static_cast<std::size_t>(di) * w;
          const float* __restrict wl = wl_.data();
          const float* __restrict wr = wr_.data() - d;
          for (int x = d; x < w; ++x) {
            const float wt = wl[x] * wr[x];
            num[x] += wt * c[x];
            den[x] += wt;
          }
        }
      }
    }

    for (int x = 0; x < w; ++x)
      for (int di = 0; di < nd_; ++di) {
        const int d = p_.d_min + di;
        float& e = out.cost[out.index(x, y, d)];
        e = x - d >= 0 ? num_[static_cast<std::size_t>(di) * w + x] / den_[static_cast<std::size_t>(di) * w + x]
                       : std::numeric_limits<float>::max();
      }
  }

 private:
  const GrayImage& left_;
  const GrayImage& right_;
  const AswParams& p_;
  const std::vector<float>& raw_;
  int pw_;
  int nd_;
  std::array<float, 256> color_lut_{};
  std::vector<float> spatial_;
  std::vector<float> num_, den_, wl_, wr_;
};

}  // namespace

CostVolume<float> asw_cost_volume(const GrayImage& left, const GrayImage& right, const AswParams& params) {
  params.validate();
  require_same_size(left, right, "asw_cost_volume");
  const int w = left.width;
  const int h = left.height;
  const int r = params.window_radius;
  const int nd = params.d_max - params.d_min + 1;
  const int pw = w + 2 * r;

  // Truncated absolute differences, layout [y][d][x + r] with zero padding.
  std::vector<float> raw(static_cast<std::size_t>(h) * nd * pw, 0.0f);
  const float trunc = static_cast<float>(params.cost_truncation);
  for (int y = 0; y < h; ++y)
    for (int di = 0; di < nd; ++di) {
      const int d = params.d_min + di;
      float* row = raw.data() + (static_cast<std::size_t>(y) * nd + di) * pw + r;
      for (int x = 0; x < w; ++x)
        row[x] = x - d >= 0 ? std::min(trunc, static_cast<float>(std::abs(left.at(x, y) - right.at(x - d, y)))) : trunc;
    }

  CostVolume<float> vol{w, h, params.d_min, params.d_max, {}};
  vol.cost.assign(static_cast<std::size_t>(w) * h * nd, 0.0f);

  const int jobs = std::clamp(params.jobs, 1, std::max(1, h));
  auto worker = [&](int first) {
    RowAggregator agg(left, right, params, raw, pw);
    for (int y = first; y < h; y += jobs) agg.run(y, vol);
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker, j);
  }
  return vol;
}

DisparityMap asw_disparity(const GrayImage& left, const GrayImage& right, const AswParams& params) {
  const auto vol = asw_cost_volume(left, right, params);
  return select_disparities(vol, params.uniqueness_ratio, params.lr_max_diff);
}

}  // namespace offroad::stereo
