#include "offroad/encodings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace offroad::encodings {
namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

int channel_count(Encoding e) {
  switch (e) {
    case Encoding::RGB: return 3;
    case Encoding::RGBD:
    case Encoding::RGBH:
    case Encoding::RGBA: return 4;
    case Encoding::RGBN:
    case Encoding::RGBDHA: return 6;
  }
  throw Error(Errc::config, "unknown encoding");
}

int EncodingKind::channel_count() const { return encodings::channel_count(encoding); }

std::string EncodingKind::label() const {
  std::string s(to_string(encoding));
  if (source != StereoSource::None) s += " (" + std::string(to_string(source)) + ")";
  return s;
}

std::string_view to_string(Encoding e) {
  switch (e) {
    case Encoding::RGB: return "RGB";
    case Encoding::RGBD: return "RGBD";
    case Encoding::RGBH: return "RGBH";
    case Encoding::RGBA: return "RGBA";
    case Encoding::RGBN: return "RGBN";
    case Encoding::RGBDHA: return "RGBDHA";
  }
  return "?";
}

std::string_view to_string(StereoSource s) {
  switch (s) {
    case StereoSource::None: return "none";
    case StereoSource::SGBM: return "SGBM";
    case StereoSource::ASW: return "ASW";
  }
  return "?";
}

Encoding parse_encoding(std::string_view name) {
  const auto n = upper(name);
  for (auto e : {Encoding::RGB, Encoding::RGBD, Encoding::RGBH, Encoding::RGBA, Encoding::RGBN, Encoding::RGBDHA})
    if (n == to_string(e)) return e;
  throw Error(Errc::config, "unknown encoding kind '" + std::string(name) + "'");
}

StereoSource parse_stereo_source(std::string_view name) {
  const auto n = upper(name);
  if (n == "SGBM") return StereoSource::SGBM;
  if (n == "ASW") return StereoSource::ASW;
  if (n == "NONE" || n.empty()) return StereoSource::None;
  throw Error(Errc::config, "unknown stereo source '" + std::string(name) + "'");
}

std::vector<EncodingKind> all_variants() {
  std::vector<EncodingKind> out{{Encoding::RGB, StereoSource::None}};
  for (auto s : {StereoSource::SGBM, StereoSource::ASW})
    for (auto e : {Encoding::RGBD, Encoding::RGBA, Encoding::RGBH, Encoding::RGBN, Encoding::RGBDHA})
      out.push_back({e, s});
  return out;
}

std::uint8_t disparity_to_byte(double d) {
  const double clamped = std::clamp(d, kDispLo, kDispHi);
  return to_byte(255.0 * (clamped - kDispLo) / (kDispHi - kDispLo));
}

std::uint8_t height_to_byte(double height_m, double camera_height_m) {
  const double top = 2.0 * camera_height_m;
  return to_byte(255.0 * std::clamp(height_m, 0.0, top) / top);
}

std::uint8_t normal_component_to_byte(double n) { return to_byte(255.0 * (std::clamp(n, -1.0, 1.0) + 1.0) / 2.0); }

std::uint8_t angle_to_byte(const geometry::Point3& normal) {
  // Gravity is fixed at (0, -1, 0) in the camera frame.
  const double a = geometry::dot(normal, {0.0, -1.0, 0.0});
  return to_byte(255.0 * std::clamp(a, 0.0, 1.0));
}

Channel8 encode_disparity(const stereo::DisparityMap& dmap) {
  Channel8 out(dmap.width, dmap.height, 0);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (dmap.valid[i]) out.data[i] = disparity_to_byte(dmap.disparity[i]);
  return out;
}

Channel8 encode_height(const stereo::DisparityMap& dmap, const geometry::CameraRig& rig) {
  Channel8 out(dmap.width, dmap.height, 0);
  for (int y = 0; y < dmap.height; ++y)
    for (int x = 0; x < dmap.width; ++x) {
      if (!dmap.is_valid(x, y)) continue;
      const auto p = geometry::reproject_pixel(x, y, dmap.at(x, y), rig);
      out.at(x, y) = height_to_byte(geometry::point_height(p, rig), rig.camera_height_m);
    }
  return out;
}

NormalMap compute_normal_map(const stereo::DisparityMap& dmap, const geometry::CameraRig& rig) {
  NormalMap out(dmap.width, dmap.height);
  for (int y = 0; y + 1 < dmap.height; ++y)
    for (int x = 0; x + 1 < dmap.width; ++x) {
      if (!dmap.is_valid(x, y) || !dmap.is_valid(x + 1, y) || !dmap.is_valid(x, y + 1)) continue;
      const auto p = geometry::reproject_pixel(x, y, dmap.at(x, y), rig);
      const auto right = geometry::reproject_pixel(x + 1, y, dmap.at(x + 1, y), rig);
      const auto down = geometry::reproject_pixel(x, y + 1, dmap.at(x, y + 1), rig);
      auto n = geometry::cross(right - p, down - p);
      const double len = std::sqrt(geometry::dot(n, n));
      if (!(len > 0) || !std::isfinite(len)) continue;
      n = {n.x / len, n.y / len, n.z / len};
      // Orient towards the camera.
      if (geometry::dot(n, p) > 0) n = {-n.x, -n.y, -n.z};
      const auto i = out.index(x, y);
      out.normals[i] = n;
      out.valid[i] = 1;
    }
  return out;
}

std::array<Channel8, 3> encode_normals(const NormalMap& nmap) {
  std::array<Channel8, 3> out{Channel8(nmap.width, nmap.height, 0), Channel8(nmap.width, nmap.height, 0),
                              Channel8(nmap.width, nmap.height, 0)};
  for (std::size_t i = 0; i < nmap.normals.size(); ++i) {
    if (!nmap.valid[i]) continue;
    out[0].data[i] = normal_component_to_byte(nmap.normals[i].x);
    out[1].data[i] = normal_component_to_byte(nmap.normals[i].y);
    out[2].data[i] = normal_component_to_byte(nmap.normals[i].z);
  }
  return out;
}

Channel8 encode_angle_with_gravity(const NormalMap& nmap) {
  Channel8 out(nmap.width, nmap.height, 0);
  for (std::size_t i = 0; i < nmap.normals.size(); ++i)
    if (nmap.valid[i]) out.data[i] = angle_to_byte(nmap.normals[i]);
  return out;
}

MultiChannelImage pack(const std::array<Channel8, 3>& rgb, EncodingKind kind, const DepthChannels& depth) {
  const bool want_d = kind.encoding == Encoding::RGBD || kind.encoding == Encoding::RGBDHA;
  const bool want_h = kind.encoding == Encoding::RGBH || kind.encoding == Encoding::RGBDHA;
  const bool want_a = kind.encoding == Encoding::RGBA || kind.encoding == Encoding::RGBDHA;
  const bool want_n = kind.encoding == Encoding::RGBN;
  auto check = [&](bool want, bool have, const char* name) {
    if (want != have)
      throw Error(Errc::encoding_arity, std::string(want ? "missing " : "unexpected ") + name + " channel for " +
                                            std::string(to_string(kind.encoding)));
  };
  check(want_d, depth.disparity.has_value(), "disparity");
  check(want_h, depth.height.has_value(), "height");
  check(want_a, depth.angle.has_value(), "angle");
  check(want_n, depth.normals.has_value(), "normal");
  if (kind.encoding == Encoding::RGB && kind.source != StereoSource::None)
    throw Error(Errc::config, "RGB encoding has no stereo source");
  if (kind.encoding != Encoding::RGB && kind.source == StereoSource::None)
    throw Error(Errc::config, std::string(to_string(kind.encoding)) + " needs a stereo source");

  MultiChannelImage out{rgb[0].width, rgb[0].height, kind, {}};
  auto add = [&](const Channel8& c) {
    require_same_size(rgb[0], c, "pack");
    out.planes.push_back(c);
  };
  for (const auto& c : rgb) add(c);
  if (want_n) {
    for (const auto& c : *depth.normals) add(c);
  } else {
    if (want_d) add(*depth.disparity);
    if (want_h) add(*depth.height);
    if (want_a) add(*depth.angle);
  }
  return out;
}

MultiChannelImage encode_image(const RgbImage& rgb, const stereo::DisparityMap& dmap, const geometry::CameraRig& rig,
                               EncodingKind kind) {
  const auto planes = split_planes(rgb);
  std::array<Channel8, 3> color{planes[0], planes[1], planes[2]};
  DepthChannels depth;
  if (kind.encoding != Encoding::RGB) require_same_size(rgb, dmap, "encode_image");
  switch (kind.encoding) {
    case Encoding::RGB: break;
    case Encoding::RGBD: depth.disparity = encode_disparity(dmap); break;
    case Encoding::RGBH: depth.height = encode_height(dmap, rig); break;
    case Encoding::RGBA: depth.angle = encode_angle_with_gravity(compute_normal_map(dmap, rig)); break;
    case Encoding::RGBN: depth.normals = encode_normals(compute_normal_map(dmap, rig)); break;
    case Encoding::RGBDHA:
      depth.disparity = encode_disparity(dmap);
      depth.height = encode_height(dmap, rig);
      depth.angle = encode_angle_with_gravity(compute_normal_map(dmap, rig));
      break;
  }
  return pack(color, kind, depth);
}

}  // namespace offroad::encodings
