#include <algorithm>
#include <array>
#include <limits>
#include <string>

#include "offroad/stereo.hpp"

namespace offroad::stereo {

void SgbmParams::validate() const {
  if (d_min < 1 || d_max < d_min) throw Error(Errc::config, "sgbm: need 1 <= d_min <= d_max");
  const bool smoothing_off = p1 == 0 && p2 == 0;
  if (!smoothing_off && !(p2 > p1 && p1 > 0)) throw Error(Errc::config, "sgbm: need p2 > p1 > 0");
  if (p2 > 1000) throw Error(Errc::config, "sgbm: p2 too large for 16-bit aggregation");
  if (num_paths != 4 && num_paths != 8) throw Error(Errc::config, "sgbm: num_paths must be 4 or 8");
  if (uniqueness_ratio >= 100) throw Error(Errc::config, "sgbm: uniqueness_ratio must be < 100");
}

namespace {

struct Direction {
  int dx;
  int dy;
};

// One raster sweep handling every direction whose predecessor p - r is
// visited earlier in that sweep. Adds L_r into `sum`.
void sweep(const CostVolume<std::uint16_t>& cost, std::vector<std::uint16_t>& sum, bool forward,
           const std::vector<Direction>& dirs, int p1, int p2) {
  const int w = cost.width;
  const int h = cost.height;
  const int nd = cost.range();
  const std::size_t row_len = static_cast<std::size_t>(w) * nd;
  const std::size_t ndirs = dirs.size();

  // Per direction: L for the previous and current rows, plus per-pixel minima.
  std::vector<std::vector<std::uint16_t>> prev(ndirs, std::vector<std::uint16_t>(row_len));
  std::vector<std::vector<std::uint16_t>> cur(ndirs, std::vector<std::uint16_t>(row_len));
  std::vector<std::vector<std::uint16_t>> prev_min(ndirs, std::vector<std::uint16_t>(w));
  std::vector<std::vector<std::uint16_t>> cur_min(ndirs, std::vector<std::uint16_t>(w));

  const int step = forward ? 1 : -1;
  const int y0 = forward ? 0 : h - 1;
  const int x0 = forward ? 0 : w - 1;
  for (int yi = 0, y = y0; yi < h; ++yi, y += step) {
    for (int xi = 0, x = x0; xi < w; ++xi, x += step) {
      const std::uint16_t* c = cost.cost.data() + cost.index(x, y, cost.d_min);
      std::uint16_t* s = sum.data() + cost.index(x, y, cost.d_min);
      for (std::size_t k = 0; k < ndirs; ++k) {
        const int px = x - dirs[k].dx;
        const int py = y - dirs[k].dy;
        std::uint16_t* l = cur[k].data() + static_cast<std::size_t>(x) * nd;
        std::uint16_t lmin = std::numeric_limits<std::uint16_t>::max();
        if (px < 0 || px >= w || py < 0 || py >= h) {
          for (int d = 0; d < nd; ++d) {
            l[d] = c[d];
            lmin = std::min(lmin, l[d]);
          }
        } else {
          const bool same_row = dirs[k].dy == 0;
          const std::uint16_t* lp = (same_row ? cur[k] : prev[k]).data() + static_cast<std::size_t>(px) * nd;
          const int mp = same_row ? cur_min[k][px] : prev_min[k][px];
          const int jump = mp + p2;
          for (int d = 0; d < nd; ++d) {
            int best = std::min<int>(lp[d], jump);
            if (d > 0) best = std::min(best, lp[d - 1] + p1);
            if (d + 1 < nd) best = std::min(best, lp[d + 1] + p1);
            l[d] = static_cast<std::uint16_t>(c[d] + best - mp);
            lmin = std::min(lmin, l[d]);
          }
        }
        cur_min[k][x] = lmin;
        for (int d = 0; d < nd; ++d) s[d] = static_cast<std::uint16_t>(s[d] + l[d]);
      }
    }
    std::swap(prev, cur);
    std::swap(prev_min, cur_min);
  }
}

}  // namespace

CostVolume<std::uint16_t> aggregate_sgm(const CostVolume<std::uint16_t>& cost, const SgbmParams& params) {
  if (params.num_paths != 4 && params.num_paths != 8) throw Error(Errc::config, "sgbm: num_paths must be 4 or 8");
  CostVolume<std::uint16_t> out{cost.width, cost.height, cost.d_min, cost.d_max, {}};
  out.cost.assign(cost.cost.size(), 0);
  const int p1 = 2 * params.p1;
  const int p2 = 2 * params.p2;
  std::vector<Direction> fwd{{1, 0}, {0, 1}};
  std::vector<Direction> bwd{{-1, 0}, {0, -1}};
  if (params.num_paths == 8) {
    fwd.push_back({1, 1});
    fwd.push_back({-1, 1});
    bwd.push_back({-1, -1});
    bwd.push_back({1, -1});
  }
  sweep(cost, out.cost, true, fwd, p1, p2);
  sweep(cost, out.cost, false, bwd, p1, p2);
  return out;
}

DisparityMap sgbm_disparity(const GrayImage& left, const GrayImage& right, const SgbmParams& params) {
  params.validate();
  require_same_size(left, right, "sgbm_disparity");
  const auto cost = bt_cost_volume(left, right, params.d_min, params.d_max);
  const auto agg = aggregate_sgm(cost, params);
  return select_disparities(agg, params.uniqueness_ratio, params.lr_max_diff);
}

}  // namespace offroad::stereo
