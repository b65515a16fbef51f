#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "offroad/image.hpp"

namespace offroad::stereo {

/// Dense disparity with validity mask. Invalid pixels carry disparity 0.
struct DisparityMap {
  int width = 0;
  int height = 0;
  std::vector<double> disparity;
  std::vector<std::uint8_t> valid;

  DisparityMap() = default;
  DisparityMap(int w, int h)
      : width(w), height(h), disparity(static_cast<std::size_t>(w) * h, 0.0), valid(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  bool is_valid(int x, int y) const { return valid[index(x, y)] != 0; }
  double at(int x, int y) const { return disparity[index(x, y)]; }
  void set(int x, int y, double d) {
    disparity[index(x, y)] = d;
    valid[index(x, y)] = 1;
  }
  void invalidate(int x, int y) {
    disparity[index(x, y)] = 0.0;
    valid[index(x, y)] = 0;
  }
  std::size_t valid_count() const;

  friend bool operator==(const DisparityMap&, const DisparityMap&) = default;
};

struct SgbmParams {
  int d_min = 1;
  int d_max = 64;
  int p1 = 8;
  int p2 = 32;
  int num_paths = 8;
  /// Percent margin the winner must beat every non-adjacent candidate by.
  int uniqueness_ratio = 10;
  /// Negative disables the left-right check.
  int lr_max_diff = 1;

  /// p2 > p1 > 0, or p1 == p2 == 0 (pure winner-take-all); num_paths in {4, 8}.
  void validate() const;
};

struct AswParams {
  int window_radius = 16;
  double gamma_color = 14.0;
  double gamma_spatial = 17.5;
  int d_min = 1;
  int d_max = 64;
  int lr_max_diff = 1;
  /// Truncation level of the absolute-difference raw cost.
  int cost_truncation = 40;
  int uniqueness_ratio = 5;
  /// Row-parallel workers; results do not depend on this value.
  int jobs = 1;

  void validate() const;
};

/// Birchfield-Tomasi dissimilarity between left[u] and right[u - d] using
/// linearly interpolated half-pixel neighbours (clamped at row ends).
/// Throws Error(Errc::out_of_range) when u or u - d leaves the rows.
double bt_cost(std::span<const std::uint8_t> left_row, std::span<const std::uint8_t> right_row, int u, int d);

/// Cost volume laid out [y][x][d - d_min]. Entries with x - d < 0 have no
/// correspondence and hold `no_match`.
template <typename T>
struct CostVolume {
  int width = 0;
  int height = 0;
  int d_min = 0;
  int d_max = 0;
  std::vector<T> cost;

  int range() const { return d_max - d_min + 1; }
  std::size_t index(int x, int y, int d) const {
    return (static_cast<std::size_t>(y) * width + x) * range() + (d - d_min);
  }
  T at(int x, int y, int d) const { return cost[index(x, y, d)]; }
};

/// BT matching cost scaled by 2 so half-level values are exact integers.
/// Candidates with x - d < 0 are costed against the right image's first
/// column; select_disparities never picks them.
CostVolume<std::uint16_t> bt_cost_volume(const GrayImage& left, const GrayImage& right, int d_min, int d_max);

/// Semi-global aggregation S(p, d) = sum over paths of L_r(p, d). Penalties
/// are in intensity units; internally doubled to match the cost scale.
CostVolume<std::uint16_t> aggregate_sgm(const CostVolume<std::uint16_t>& cost, const SgbmParams& params);

/// Winner-take-all on an aggregated volume, lowest disparity on ties, then
/// uniqueness and left-right checks. Candidates with x - d < 0 are skipped.
template <typename T>
DisparityMap select_disparities(const CostVolume<T>& volume, int uniqueness_ratio, int lr_max_diff);

DisparityMap sgbm_disparity(const GrayImage& left, const GrayImage& right, const SgbmParams& params = {});

/// exp(-(delta_color / gamma_color + delta_spatial / gamma_spatial)).
double asw_support_weight(double delta_color, double delta_spatial, const AswParams& params);

/// Normalised support-weighted cost volume E(p, d) in float.
CostVolume<float> asw_cost_volume(const GrayImage& left, const GrayImage& right, const AswParams& params);

DisparityMap asw_disparity(const GrayImage& left, const GrayImage& right, const AswParams& params = {});

/// Disparity stored as round(d * 256), 0 for invalid pixels.
Plane<std::uint16_t> to_fixed_point(const DisparityMap& dmap);
DisparityMap from_fixed_point(const Plane<std::uint16_t>& fixed);

/// False-colour (jet) visualisation over [d_min, d_max]; invalid pixels black.
RgbImage colorize(const DisparityMap& dmap, double d_min = 1.0, double d_max = 64.0);

GrayImage flip_horizontal(const GrayImage& img);
DisparityMap flip_horizontal(const DisparityMap& dmap);

}  // namespace offroad::stereo
