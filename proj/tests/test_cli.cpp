#include "offroad/cli.hpp"

#include <sstream>

#include <gtest/gtest.h>

#include "offroad/dataset.hpp"
#include "offroad/image_io.hpp"
#include "offroad/synthscene.hpp"
#include "test_support.hpp"

using namespace offroad;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "offroad");
  std::ostringstream out, err;
  const int code = cli::run_command(args, out, err);
  return {code, out.str(), err.str()};
}

void write_small_rig(const fs::path& p) {
  geometry::CameraRig rig;
  rig.focal_length_px = 200.0 / 3.0;
  rig.principal_point = {32, 24};
  rig.image_size = {64, 48};
  rig.save(p);
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"stereo", "--left", "a.png"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, MissingInputIsIoError) {
  offroad::testing::TempDir tmp;
  const auto r = run({"stereo", "--left", (tmp / "nope.png").string(), "--right", (tmp / "nope2.png").string(),
                      "--out", (tmp / "d.png").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("nope.png"), std::string::npos);
}

TEST(Cli, RenderEncodeRgbdha) {
  offroad::testing::TempDir tmp;
  write_small_rig(tmp / "rig.txt");
  const auto rig = (tmp / "rig.txt").string();
  synth::SceneSpec spec = synth::fronto_plane_scene(8, geometry::CameraRig::load(tmp / "rig.txt"), 1);
  spec.save(tmp / "plane.json");
  ASSERT_EQ(run({"--rig", rig, "render-synthetic", "--spec", (tmp / "plane.json").string(), "--out",
                 (tmp / "scene").string()}).code, 0);
  for (auto f : {"left.png", "right.png", "gt_disparity.png", "labels.png", "meta.json", "manifest.txt"})
    EXPECT_TRUE(fs::exists(tmp / "scene" / f)) << f;
  const auto gt = io::read_gray16(tmp / "scene/gt_disparity.png");
  EXPECT_EQ(gt.at(10, 10), 8 * 256);

  const auto r = run({"--rig", rig, "encode", "--left", (tmp / "scene/left.png").string(), "--right",
                      (tmp / "scene/right.png").string(), "--kind", "rgbdha", "--stereo", "sgbm", "--out",
                      (tmp / "x.orc").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  dataset::ContainerHeader hdr;
  const auto img = dataset::read_container(tmp / "x.orc", &hdr);
  EXPECT_EQ(img.channel_count(), 6);
  EXPECT_EQ(hdr.rig_hash, geometry::CameraRig::load(tmp / "rig.txt").hash());
}

TEST(Cli, EncodeNeedsStereoSource) {
  offroad::testing::TempDir tmp;
  EXPECT_EQ(run({"encode", "--left", "a", "--right", "b", "--kind", "rgbh", "--out", "x"}).code, 2);
}

TEST(Cli, RigSizeMismatch) {
  offroad::testing::TempDir tmp;
  write_small_rig(tmp / "rig.txt");
  io::write_gray(tmp / "l.png", GrayImage(20, 10));
  const auto r = run({"--rig", (tmp / "rig.txt").string(), "encode", "--left", (tmp / "l.png").string(),
                      "--right", (tmp / "l.png").string(), "--kind", "rgbd", "--stereo", "sgbm", "--out",
                      (tmp / "x.orc").string()});
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, EvalIdenticalDirsIsPerfect) {
  offroad::testing::TempDir tmp;
  fs::create_directories(tmp / "gt");
  LabelMap l(8, 8);
  for (std::size_t i = 0; i < l.data.size(); ++i) l.data[i] = static_cast<std::uint8_t>(i % 6);
  io::write_gray(tmp / "gt/a.png", l);
  io::write_gray(tmp / "gt/b.png", l);
  const auto r = run({"eval", "--pred", (tmp / "gt").string(), "--gt", (tmp / "gt").string(), "--name", "same",
                      "--out", (tmp / "m.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("1.0000*"), std::string::npos) << r.out;
  const auto rep = run({"report", (tmp / "m.csv").string(), (tmp / "m.csv").string()});
  EXPECT_EQ(rep.code, 0);
  EXPECT_NE(rep.out.find("(* best in column)"), std::string::npos);
}

TEST(Cli, SplitWritesManifests) {
  offroad::testing::TempDir tmp;
  write_small_rig(tmp / "rig.txt");
  ASSERT_EQ(run({"--rig", (tmp / "rig.txt").string(), "--seed", "3", "render-synthetic", "--random", "5", "--out",
                 (tmp / "d").string()}).code, 0);
  const auto r = run({"--seed", "3", "split", "--manifest", (tmp / "d/manifest.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "train 4 test 1\n");
  EXPECT_EQ(dataset::Manifest::load(tmp / "d/train.txt").samples.size(), 4u);
}

TEST(Cli, GlobalFlagsAfterSubcommand) {
  offroad::testing::TempDir tmp;
  write_small_rig(tmp / "rig.txt");
  const auto r = run({"render-synthetic", "--random", "1", "--out", (tmp / "d").string(), "--rig",
                      (tmp / "rig.txt").string(), "--verbose"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("\"command\":\"render-synthetic\""), std::string::npos);
  EXPECT_EQ(io::read_rgb(tmp / "d/scene_000/left.png").width, 64);
}
