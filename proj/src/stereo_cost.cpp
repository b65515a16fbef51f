#include <algorithm>
#include <cmath>
#include <limits>

#include "offroad/stereo.hpp"

namespace offroad::stereo {
namespace {

// Doubled intensities keep the half-pixel interpolants integral.
struct Interval2 {
  int lo;
  int hi;
};

Interval2 interval2(std::span<const std::uint8_t> row, int x) {
  const int n = static_cast<int>(row.size());
  const int c = row[x];
  const int minus = c + row[std::max(x - 1, 0)];
  const int plus = c + row[std::min(x + 1, n - 1)];
  return {std::min({2 * c, minus, plus}), std::max({2 * c, minus, plus})};
}

int one_sided2(int value2, Interval2 iv) { return std::max({0, value2 - iv.hi, iv.lo - value2}); }

int bt_cost2(std::span<const std::uint8_t> left, std::span<const std::uint8_t> right, int xl, int xr) {
  const int l2 = 2 * left[xl];
  const int r2 = 2 * right[xr];
  return std::min(one_sided2(l2, interval2(right, xr)), one_sided2(r2, interval2(left, xl)));
}

}  // namespace

std::size_t DisparityMap::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

double bt_cost(std::span<const std::uint8_t> left_row, std::span<const std::uint8_t> right_row, int u, int d) {
  const int n = static_cast<int>(left_row.size());
  if (right_row.size() != left_row.size()) throw Error(Errc::dimension, "bt_cost: row lengths differ");
  if (u < 0 || u >= n || u - d < 0 || u - d >= n)
    throw Error(Errc::out_of_range, "bt_cost: u=" + std::to_string(u) + " d=" + std::to_string(d));
  return 0.5 * bt_cost2(left_row, right_row, u, u - d);
}

CostVolume<std::uint16_t> bt_cost_volume(const GrayImage& left, const GrayImage& right, int d_min, int d_max) {
  require_same_size(left, right, "bt_cost_volume");
  if (d_min < 0 || d_max < d_min) throw Error(Errc::config, "invalid disparity range");
  CostVolume<std::uint16_t> vol{left.width, left.height, d_min, d_max, {}};
  vol.cost.assign(static_cast<std::size_t>(left.width) * left.height * vol.range(), 0);
  for (int y = 0; y < left.height; ++y) {
    const auto lrow = left.row(y);
    const auto rrow = right.row(y);
    for (int x = 0; x < left.width; ++x)
      for (int d = d_min; d <= d_max; ++d)
        vol.cost[vol.index(x, y, d)] = static_cast<std::uint16_t>(bt_cost2(lrow, rrow, x, std::max(x - d, 0)));
  }
  return vol;
}

template <typename T>
DisparityMap select_disparities(const CostVolume<T>& vol, int uniqueness_ratio, int lr_max_diff) {
  const int w = vol.width;
  const int h = vol.height;
  DisparityMap out(w, h);
  std::vector<int> right_best(static_cast<std::size_t>(w));
  std::vector<int> left_best(static_cast<std::size_t>(w));

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int hi = std::min(vol.d_max, x);
      int best = -1;
      T best_cost{};
      for (int d = vol.d_min; d <= hi; ++d) {
        const T c = vol.at(x, y, d);
        if (best < 0 || c < best_cost) {
          best = d;
          best_cost = c;
        }
      }
      if (best >= 0 && uniqueness_ratio >= 0) {
        for (int d = vol.d_min; d <= hi; ++d) {
          if (std::abs(d - best) <= 1) continue;
          const double c = static_cast<double>(vol.at(x, y, d));
          if (c * (100 - uniqueness_ratio) <= static_cast<double>(best_cost) * 100) {
            best = -1;
            break;
          }
        }
      }
      left_best[x] = best;
    }

    if (lr_max_diff >= 0) {
      // Right-view winners read the same volume along the diagonal x = xr + d.
      for (int xr = 0; xr < w; ++xr) {
        int best = -1;
        T best_cost{};
        for (int d = vol.d_min; d <= vol.d_max && xr + d < w; ++d) {
          const T c = vol.at(xr + d, y, d);
          if (best < 0 || c < best_cost) {
            best = d;
            best_cost = c;
          }
        }
        right_best[xr] = best;
      }
    }

    for (int x = 0; x < w; ++x) {
      const int d = left_best[x];
      if (d < 0) continue;
      if (lr_max_diff >= 0) {
        const int rd = right_best[x - d];
        if (rd < 0 || std::abs(rd - d) > lr_max_diff) continue;
      }
      out.set(x, y, d);
    }
  }
  return out;
}

template DisparityMap select_disparities(const CostVolume<std::uint16_t>&, int, int);
template DisparityMap select_disparities(const CostVolume<float>&, int, int);

Plane<std::uint16_t> to_fixed_point(const DisparityMap& dmap) {
  Plane<std::uint16_t> out(dmap.width, dmap.height, 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!dmap.valid[i]) continue;
    const double v = std::floor(dmap.disparity[i] * 256.0 + 0.5);
    out.data[i] = static_cast<std::uint16_t>(std::clamp(v, 1.0, 65535.0));
  }
  return out;
}

DisparityMap from_fixed_point(const Plane<std::uint16_t>& fixed) {
  DisparityMap out(fixed.width, fixed.height);
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    if (fixed.data[i] == 0) continue;
    out.disparity[i] = fixed.data[i] / 256.0;
    out.valid[i] = 1;
  }
  return out;
}

RgbImage colorize(const DisparityMap& dmap, double d_min, double d_max) {
  RgbImage out(dmap.width, dmap.height);
  for (std::size_t i = 0; i < dmap.disparity.size(); ++i) {
    if (!dmap.valid[i]) continue;
    const double t = std::clamp((dmap.disparity[i] - d_min) / (d_max - d_min), 0.0, 1.0);
    const auto ch = [t](double offset) {
      const double v = std::clamp(1.5 - std::abs(4.0 * t - offset), 0.0, 1.0);
      return static_cast<std::uint8_t>(std::floor(255.0 * v + 0.5));
    };
    out.data[i * 3] = ch(3.0);
    out.data[i * 3 + 1] = ch(2.0);
    out.data[i * 3 + 2] = ch(1.0);
  }
  return out;
}

GrayImage flip_horizontal(const GrayImage& img) {
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(img.width - 1 - x, y) = img.at(x, y);
  return out;
}

DisparityMap flip_horizontal(const DisparityMap& dmap) {
  DisparityMap out(dmap.width, dmap.height);
  for (int y = 0; y < dmap.height; ++y)
    for (int x = 0; x < dmap.width; ++x) {
      const auto src = dmap.index(x, y);
      const auto dst = out.index(dmap.width - 1 - x, y);
      out.disparity[dst] = dmap.disparity[src];
      out.valid[dst] = dmap.valid[src];
    }
  return out;
}

}  // namespace offroad::stereo
