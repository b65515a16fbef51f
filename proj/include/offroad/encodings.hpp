#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "offroad/geometry.hpp"
#include "offroad/image.hpp"
#include "offroad/stereo.hpp"

namespace offroad::encodings {

/// Disparity range mapped onto the 8-bit D channel.
inline constexpr double kDispLo = 1.0;
inline constexpr double kDispHi = 64.0;

struct NormalMap {
  int width = 0;
  int height = 0;
  std::vector<geometry::Point3> normals;
  std::vector<std::uint8_t> valid;

  NormalMap() = default;
  NormalMap(int w, int h)
      : width(w), height(h), normals(static_cast<std::size_t>(w) * h), valid(static_cast<std::size_t>(w) * h, 0) {}
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

enum class Encoding : std::uint8_t { RGB = 0, RGBD = 1, RGBH = 2, RGBA = 3, RGBN = 4, RGBDHA = 5 };
enum class StereoSource : std::uint8_t { None = 0, SGBM = 1, ASW = 2 };

struct EncodingKind {
  Encoding encoding = Encoding::RGB;
  StereoSource source = StereoSource::None;

  int channel_count() const;
  /// e.g. "RGBH (SGBM)", "RGB".
  std::string label() const;
  friend bool operator==(const EncodingKind&, const EncodingKind&) = default;
};

int channel_count(Encoding e);
std::string_view to_string(Encoding e);
std::string_view to_string(StereoSource s);
/// Case-insensitive; throws Error(Errc::config) on unknown names.
Encoding parse_encoding(std::string_view name);
StereoSource parse_stereo_source(std::string_view name);

/// The RGB baseline followed by every depth-bearing kind for both matchers.
std::vector<EncodingKind> all_variants();

struct MultiChannelImage {
  int width = 0;
  int height = 0;
  EncodingKind kind;
  std::vector<Channel8> planes;

  int channel_count() const { return static_cast<int>(planes.size()); }
  friend bool operator==(const MultiChannelImage&, const MultiChannelImage&) = default;
};

// Byte maps, all round-half-up.
std::uint8_t disparity_to_byte(double d);
std::uint8_t height_to_byte(double height_m, double camera_height_m);
std::uint8_t normal_component_to_byte(double n);
std::uint8_t angle_to_byte(const geometry::Point3& normal);

Channel8 encode_disparity(const stereo::DisparityMap& dmap);
Channel8 encode_height(const stereo::DisparityMap& dmap, const geometry::CameraRig& rig);
NormalMap compute_normal_map(const stereo::DisparityMap& dmap, const geometry::CameraRig& rig);
std::array<Channel8, 3> encode_normals(const NormalMap& nmap);
Channel8 encode_angle_with_gravity(const NormalMap& nmap);

struct DepthChannels {
  std::optional<Channel8> disparity;
  std::optional<Channel8> height;
  std::optional<Channel8> angle;
  std::optional<std::array<Channel8, 3>> normals;
};

/// Packs planes in the order R,G,B then D | H | A | Nx,Ny,Nz | D,H,A.
/// Throws Errc::encoding_arity when the supplied channels differ from the
/// kind's requirements and Errc::dimension on size mismatch.
MultiChannelImage pack(const std::array<Channel8, 3>& rgb, EncodingKind kind, const DepthChannels& depth = {});

/// Computes just the channels the kind needs and packs them.
MultiChannelImage encode_image(const RgbImage& rgb, const stereo::DisparityMap& dmap, const geometry::CameraRig& rig,
                               EncodingKind kind);

}  // namespace offroad::encodings
