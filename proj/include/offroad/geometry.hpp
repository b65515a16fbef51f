#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace offroad::geometry {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  friend bool operator==(const Point3&, const Point3&) = default;
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

struct ImageSize {
  int width = 0;
  int height = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

/// Rectified pinhole stereo rig. Camera frame is +x right, +y down,
/// +z forward; the assumed ground plane sits camera_height_m below the
/// optical centre (rotated by pitch_rad, positive = camera tilted down).
struct CameraRig {
  double focal_length_px = 500.0;
  double baseline_m = 0.4;
  PixelCoord principal_point{240.0, 180.0};
  double camera_height_m = 1.5;
  ImageSize image_size{480, 360};
  double pitch_rad = 0.0;

  /// Throws Error(Errc::config) when an invariant does not hold.
  void validate() const;

  /// Stable 64-bit FNV-1a hash of the canonical text form.
  std::uint64_t hash() const;

  std::string to_text() const;
  static CameraRig from_text(const std::string& text);
  static CameraRig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  friend bool operator==(const CameraRig&, const CameraRig&) = default;
};

/// z = f * B / d. Throws Error(Errc::invalid_disparity) for d <= 0.
double depth_from_disparity(double disparity, const CameraRig& rig);

/// Inverse of depth_from_disparity.
double disparity_from_depth(double depth, const CameraRig& rig);

Point3 reproject_pixel(double u, double v, double disparity, const CameraRig& rig);

/// Height of p above the assumed ground plane (h - y when pitch is zero).
double point_height(const Point3& p, const CameraRig& rig);

inline Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Point3 cross(const Point3& a, const Point3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

}  // namespace offroad::geometry
