#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "offroad/geometry.hpp"
#include "offroad/labels.hpp"
#include "offroad/stereo.hpp"

namespace offroad::synth {

using geometry::Point3;
using Color = std::array<std::uint8_t, 3>;

struct Texture {
  enum class Kind { noise, checker };
  Kind kind = Kind::noise;
  /// Lattice cell size in metres on the surface. 0 means one pixel at the
  /// primitive's reference depth (fronto planes only; 0.05 m otherwise).
  double cell_m = 0.0;
  /// Relative intensity modulation in [0, 1].
  double amplitude = 0.4;
};

struct Box3 {
  Point3 min{-1e9, -1e9, -1e9};
  Point3 max{1e9, 1e9, 1e9};
  bool contains(const Point3& p, double eps = 1e-9) const {
    return p.x >= min.x - eps && p.x <= max.x + eps && p.y >= min.y - eps && p.y <= max.y + eps &&
           p.z >= min.z - eps && p.z <= max.z + eps;
  }
};

struct Primitive {
  enum class Type { fronto, ground, slanted, box };
  Type type = Type::fronto;
  ClassLabel label = ClassLabel::tree;
  Color color{128, 128, 128};
  Texture texture;
  double depth = 10.0;      // fronto: plane z = depth
  Point3 normal{0, -1, 0};  // slanted: plane through `point` with this normal
  Point3 point{0, 0, 10};
  /// Clip region for planes; the solid itself for boxes. Camera frame.
  Box3 bounds;
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  std::uint64_t seed = 0;
  /// Std-dev of additive Gaussian intensity noise, applied equally to R, G, B.
  double noise_sigma = 0.0;
  Color sky_color{150, 190, 235};

  std::string to_json() const;
  static SceneSpec from_json(const std::string& text);
  static SceneSpec load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct GroundTruth {
  stereo::DisparityMap disparity;       // valid where a surface was hit
  std::vector<Point3> points;           // camera-frame hit points (left view)
  std::vector<Point3> normals;          // unit, facing the camera
  std::vector<double> height_m;         // above the assumed ground plane
  LabelMap label;
  std::vector<std::uint8_t> occluded;   // 1 where the point is not visible in the right view
};

struct RenderedScene {
  RgbImage left;
  RgbImage right;
  GroundTruth gt;
};

/// Ray-casts both views. Throws Error(Errc::range) if a visible surface
/// falls outside the [1, 64] px disparity range for this rig.
RenderedScene render_scene(const SceneSpec& spec, const geometry::CameraRig& rig);

/// Single fronto-parallel textured plane filling the view at disparity d.
SceneSpec fronto_plane_scene(double disparity, const geometry::CameraRig& rig, std::uint64_t seed,
                             double noise_sigma = 0.0);

/// Flat ground from near the camera out to disparity 1.5 with sky above.
SceneSpec ground_plane_scene(const geometry::CameraRig& rig, std::uint64_t seed);

/// Background plane at d_back with a foreground rectangle at d_front
/// covering the central part of the image (a vertical depth edge on each side).
SceneSpec depth_edge_scene(double d_back, double d_front, const geometry::CameraRig& rig, std::uint64_t seed);

/// Randomised off-road layout: sky, banded ground (water/dirt/grass),
/// tree line and bushes.
SceneSpec random_offroad_scene(std::uint64_t seed, const geometry::CameraRig& rig);

}  // namespace offroad::synth
