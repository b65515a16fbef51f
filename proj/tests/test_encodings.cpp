#include "offroad/encodings.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "offroad/synthscene.hpp"

using namespace offroad;
using namespace offroad::encodings;
using geometry::CameraRig;
using geometry::Point3;
using stereo::DisparityMap;

namespace {

DisparityMap single(double d) {
  DisparityMap dm(1, 1);
  dm.set(0, 0, d);
  return dm;
}

DisparityMap constant_map(int w, int h, double d) {
  DisparityMap dm(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) dm.set(x, y, d);
  return dm;
}

// Disparity of the ground plane y = h at row v: d = B (v - cy) / h.
DisparityMap ground_disparity(const CameraRig& rig) {
  DisparityMap dm(rig.image_size.width, rig.image_size.height);
  for (int v = 0; v < dm.height; ++v) {
    const double d = rig.baseline_m * (v - rig.principal_point.v) / rig.camera_height_m;
    if (d <= 0) continue;
    for (int u = 0; u < dm.width; ++u) dm.set(u, v, d);
  }
  return dm;
}

std::array<Channel8, 3> rgb_planes(int w, int h, std::uint8_t base) {
  return {Channel8(w, h, base), Channel8(w, h, static_cast<std::uint8_t>(base + 1)),
          Channel8(w, h, static_cast<std::uint8_t>(base + 2))};
}

}  // namespace

TEST(EncodeDisparity, Examples) {
  EXPECT_EQ(encode_disparity(single(64)).data[0], 255);
  EXPECT_EQ(encode_disparity(single(1)).data[0], 0);
  EXPECT_EQ(encode_disparity(single(32.5)).data[0], 128);
  EXPECT_EQ(encode_disparity(DisparityMap(1, 1)).data[0], 0);
}

TEST(EncodeDisparity, ClampAndMonotone) {
  EXPECT_EQ(disparity_to_byte(0.25), 0);
  EXPECT_EQ(disparity_to_byte(500.0), 255);
  int prev = -1;
  for (double d = 0.0; d <= 70.0; d += 0.0625) {
    const int b = disparity_to_byte(d);
    EXPECT_GE(b, prev);
    prev = b;
  }
}

TEST(EncodeDisparity, RoundHalfUpBoundary) {
  // 255 (d - 1) / 63 = k + 1/2 exactly when d = 1 + 63 (2k + 1) / 510.
  for (int k = 0; k < 255; ++k) {
    const double d = 1.0 + 63.0 * (2 * k + 1) / 510.0;
    const double exact = 255.0 * (d - 1.0) / 63.0;
    if (exact != k + 0.5) continue;  // not representable exactly in binary
    EXPECT_EQ(disparity_to_byte(d), k + 1);
  }
}

TEST(EncodeHeight, Examples) {
  const CameraRig rig;
  EXPECT_EQ(height_to_byte(0.0, 1.5), 0);
  EXPECT_EQ(height_to_byte(-0.3, 1.5), 0);
  EXPECT_EQ(height_to_byte(3.0, 1.5), 255);
  EXPECT_EQ(height_to_byte(10.0, 1.5), 255);
  EXPECT_EQ(height_to_byte(1.5, 1.5), 128);

  // Principal row: y = 0, so height = h.
  DisparityMap mid(rig.image_size.width, rig.image_size.height);
  mid.set(10, static_cast<int>(rig.principal_point.v), 20.0);
  EXPECT_EQ(encode_height(mid, rig).at(10, static_cast<int>(rig.principal_point.v)), 128);
  EXPECT_EQ(encode_height(mid, rig).at(11, 0), 0);
}

TEST(EncodeHeight, GroundIsZero) {
  const CameraRig rig;
  const auto dm = ground_disparity(rig);
  const auto h = encode_height(dm, rig);
  for (std::size_t i = 0; i < h.data.size(); ++i)
    if (dm.valid[i]) ASSERT_EQ(h.data[i], 0);
}

TEST(EncodeHeight, MonotoneInHeight) {
  int prev = -1;
  for (double m = -1.0; m < 4.0; m += 0.001) {
    const int b = height_to_byte(m, 1.5);
    EXPECT_GE(b, prev);
    prev = b;
  }
}

TEST(Normals, FrontoParallel) {
  const CameraRig rig;
  const auto nm = compute_normal_map(constant_map(12, 9, 10.0), rig);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 11; ++x) {
      const auto i = nm.index(x, y);
      ASSERT_TRUE(nm.valid[i]);
      EXPECT_NEAR(nm.normals[i].x, 0.0, 1e-6);
      EXPECT_NEAR(nm.normals[i].y, 0.0, 1e-6);
      EXPECT_NEAR(nm.normals[i].z, -1.0, 1e-6);
    }
  // Last row and column lack forward neighbours.
  EXPECT_FALSE(nm.valid[nm.index(11, 3)]);
  EXPECT_FALSE(nm.valid[nm.index(3, 8)]);
}

TEST(Normals, GroundPlane) {
  const CameraRig rig;
  const auto dm = ground_disparity(rig);
  const auto nm = compute_normal_map(dm, rig);
  std::size_t n = 0;
  for (std::size_t i = 0; i < nm.valid.size(); ++i) {
    if (!nm.valid[i]) continue;
    ++n;
    EXPECT_NEAR(nm.normals[i].x, 0.0, 1e-3);
    EXPECT_NEAR(nm.normals[i].y, -1.0, 1e-3);
    EXPECT_NEAR(nm.normals[i].z, 0.0, 1e-3);
  }
  EXPECT_GT(n, 1000u);
}

TEST(Normals, IsolatedPixelInvalid) {
  DisparityMap dm(5, 5);
  dm.set(2, 2, 9.0);
  const auto nm = compute_normal_map(dm, CameraRig{});
  for (auto v : nm.valid) EXPECT_EQ(v, 0);
}

TEST(Normals, UnitLengthAndFacingCamera) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(2.0, 60.0);
  DisparityMap dm(20, 15);
  for (int y = 0; y < 15; ++y)
    for (int x = 0; x < 20; ++x)
      if (rng() % 5) dm.set(x, y, dist(rng));
  const CameraRig rig;
  const auto nm = compute_normal_map(dm, rig);
  for (int y = 0; y < 15; ++y)
    for (int x = 0; x < 20; ++x) {
      const auto i = nm.index(x, y);
      if (!nm.valid[i]) continue;
      const auto& n = nm.normals[i];
      EXPECT_NEAR(std::sqrt(geometry::dot(n, n)), 1.0, 1e-6);
      EXPECT_LE(geometry::dot(n, geometry::reproject_pixel(x, y, dm.at(x, y), rig)), 0.0);
    }
}

TEST(EncodeNormals, Examples) {
  NormalMap nm(3, 1);
  nm.normals = {{0, 0, -1}, {0, -1, 0}, {0, 0, -1}};
  nm.valid = {1, 1, 0};
  const auto c = encode_normals(nm);
  EXPECT_EQ(c[0].data[0], 128);
  EXPECT_EQ(c[1].data[0], 128);
  EXPECT_EQ(c[2].data[0], 0);
  EXPECT_EQ(c[0].data[1], 128);
  EXPECT_EQ(c[1].data[1], 0);
  EXPECT_EQ(c[2].data[1], 128);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(c[k].data[2], 0);
  EXPECT_EQ(normal_component_to_byte(1.0), 255);
}

TEST(EncodeAngle, Examples) {
  NormalMap nm(4, 1);
  nm.normals = {{0, -1, 0}, {0, 0, -1}, {0, 1, 0}, {0, -1, 0}};
  nm.valid = {1, 1, 1, 0};
  const auto a = encode_angle_with_gravity(nm);
  EXPECT_EQ(a.data[0], 255);
  EXPECT_EQ(a.data[1], 0);
  EXPECT_EQ(a.data[2], 0);
  EXPECT_EQ(a.data[3], 0);
  // cos 60deg = 0.5 -> 127.5 rounds up.
  EXPECT_EQ(angle_to_byte({0, -0.5, -std::sqrt(0.75)}), 128);
}

TEST(EncodeAngle, SyntheticGroundScene) {
  const CameraRig rig;
  const auto scene = synth::render_scene(synth::ground_plane_scene(rig, 1), rig);
  const auto a = encode_angle_with_gravity(compute_normal_map(scene.gt.disparity, rig));
  const auto nm = compute_normal_map(scene.gt.disparity, rig);
  std::size_t n = 0, good = 0;
  for (std::size_t i = 0; i < nm.valid.size(); ++i) {
    if (!nm.valid[i] || scene.gt.label.data[i] == static_cast<std::uint8_t>(ClassLabel::sky)) continue;
    ++n;
    good += a.data[i] >= 250;
  }
  ASSERT_GT(n, 0u);
  EXPECT_GE(double(good) / n, 0.99);
}

TEST(EncodingKind, ChannelCountsAndVariants) {
  EXPECT_EQ(channel_count(Encoding::RGB), 3);
  EXPECT_EQ(channel_count(Encoding::RGBD), 4);
  EXPECT_EQ(channel_count(Encoding::RGBH), 4);
  EXPECT_EQ(channel_count(Encoding::RGBA), 4);
  EXPECT_EQ(channel_count(Encoding::RGBN), 6);
  EXPECT_EQ(channel_count(Encoding::RGBDHA), 6);
  const auto all = all_variants();
  ASSERT_EQ(all.size(), 11u);
  int depth_bearing = 0;
  for (const auto& k : all) depth_bearing += k.encoding != Encoding::RGB;
  EXPECT_EQ(depth_bearing, 10);
  EXPECT_EQ(parse_encoding("RgbDhA"), Encoding::RGBDHA);
  EXPECT_EQ(parse_stereo_source("ASW"), StereoSource::ASW);
  EXPECT_THROW(parse_encoding("rgbx"), Error);
  EXPECT_EQ((EncodingKind{Encoding::RGBH, StereoSource::SGBM}.label()), "RGBH (SGBM)");
}

TEST(Pack, PlaneOrderAndSlicing) {
  const int w = 5, h = 4;
  const auto rgb = rgb_planes(w, h, 10);
  DepthChannels dc;
  dc.disparity = Channel8(w, h, 100);
  dc.height = Channel8(w, h, 101);
  dc.angle = Channel8(w, h, 102);
  const auto img = pack(rgb, {Encoding::RGBDHA, StereoSource::SGBM}, dc);
  ASSERT_EQ(img.channel_count(), 6);
  EXPECT_EQ(img.planes[0], rgb[0]);
  EXPECT_EQ(img.planes[2], rgb[2]);
  EXPECT_EQ(img.planes[3], *dc.disparity);
  EXPECT_EQ(img.planes[4], *dc.height);
  EXPECT_EQ(img.planes[5], *dc.angle);

  DepthChannels nc;
  nc.normals = std::array<Channel8, 3>{Channel8(w, h, 1), Channel8(w, h, 2), Channel8(w, h, 3)};
  const auto n = pack(rgb, {Encoding::RGBN, StereoSource::ASW}, nc);
  ASSERT_EQ(n.channel_count(), 6);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(n.planes[3 + k], (*nc.normals)[k]);

  const auto plain = pack(rgb, {Encoding::RGB, StereoSource::None});
  ASSERT_EQ(plain.channel_count(), 3);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(plain.planes[k], rgb[k]);
}

TEST(Pack, SingleDepthKinds) {
  const auto rgb = rgb_planes(3, 3, 0);
  const std::pair<Encoding, int> cases[] = {{Encoding::RGBD, 0}, {Encoding::RGBH, 1}, {Encoding::RGBA, 2}};
  for (auto [e, which] : cases) {
    DepthChannels dc;
    const Channel8 plane(3, 3, 200);
    if (which == 0) dc.disparity = plane;
    if (which == 1) dc.height = plane;
    if (which == 2) dc.angle = plane;
    const auto img = pack(rgb, {e, StereoSource::SGBM}, dc);
    ASSERT_EQ(img.channel_count(), 4);
    EXPECT_EQ(img.planes[3], plane);
  }
}

TEST(Pack, ArityErrors) {
  const auto rgb = rgb_planes(3, 3, 0);
  DepthChannels dc;
  dc.disparity = Channel8(3, 3, 0);
  try {
    pack(rgb, {Encoding::RGBH, StereoSource::SGBM}, dc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::encoding_arity);
  }
  EXPECT_THROW(pack(rgb, {Encoding::RGB, StereoSource::None}, dc), Error);
  EXPECT_THROW(pack(rgb, {Encoding::RGBDHA, StereoSource::SGBM}, dc), Error);
}

TEST(Pack, DimensionMismatch) {
  const auto rgb = rgb_planes(3, 3, 0);
  DepthChannels dc;
  dc.height = Channel8(4, 3, 0);
  try {
    pack(rgb, {Encoding::RGBH, StereoSource::SGBM}, dc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dimension);
  }
}

TEST(EncodeImage, InvalidPixelsAreZeroInEveryDepthPlane) {
  const CameraRig rig;
  DisparityMap dm = constant_map(8, 6, 12.0);
  dm.invalidate(3, 2);
  RgbImage rgb(8, 6);
  for (auto kind : all_variants()) {
    const auto img = encode_image(rgb, dm, rig, kind);
    ASSERT_EQ(img.channel_count(), kind.channel_count());
    for (int c = 3; c < img.channel_count(); ++c) EXPECT_EQ(img.planes[c].at(3, 2), 0) << kind.label();
  }
}
