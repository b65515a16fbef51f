#include "offroad/dataset.hpp"

#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "offroad/image_io.hpp"
#include "test_support.hpp"

using namespace offroad;
using namespace offroad::dataset;
using encodings::EncodingKind;
using encodings::Encoding;
using encodings::StereoSource;

namespace {

std::vector<std::string> make_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("img" + std::to_string(i));
  return ids;
}

encodings::MultiChannelImage random_mci(EncodingKind kind, int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  encodings::MultiChannelImage img{w, h, kind, {}};
  for (int c = 0; c < kind.channel_count(); ++c) {
    Channel8 p(w, h);
    for (auto& v : p.data) v = static_cast<std::uint8_t>(rng());
    img.planes.push_back(p);
  }
  return img;
}

}  // namespace

TEST(Palette, ParseAndLookup) {
  const auto p = Palette::parse("# colour table\n150,190,235,sky\n0, 0, 255, water\n\n10,10,10,tree\n");
  EXPECT_EQ(p.size(), 3u);
  EXPECT_EQ(p.lookup({0, 0, 255}), ClassLabel::water);
  EXPECT_FALSE(p.lookup({1, 2, 3}).has_value());
  EXPECT_THROW(Palette::parse("1,2,3,lava\n"), Error);
  EXPECT_THROW(Palette::parse("1,2,sky\n"), Error);
  EXPECT_THROW(Palette::parse("1,2,300,sky\n"), Error);
}

TEST(Ingest, AllSky) {
  const auto pal = Palette::default_palette();
  RgbImage img(6, 4);
  const auto sky = *pal.color_of(ClassLabel::sky);
  for (int i = 0; i < 24; ++i) std::copy(sky.begin(), sky.end(), img.data.begin() + 3 * i);
  const auto r = ingest_label_image(img, pal);
  EXPECT_EQ(r.unknown_pixels, 0u);
  for (auto l : r.labels.data) EXPECT_EQ(l, static_cast<std::uint8_t>(ClassLabel::sky));
}

TEST(Ingest, SixColoursSixLabels) {
  const auto pal = Palette::default_palette();
  RgbImage img(6, 1);
  for (int c = 0; c < kNumClasses; ++c) {
    const auto col = *pal.color_of(static_cast<ClassLabel>(c));
    std::copy(col.begin(), col.end(), img.data.begin() + 3 * c);
  }
  const auto r = ingest_label_image(img, pal);
  std::set<int> seen(r.labels.data.begin(), r.labels.data.end());
  EXPECT_EQ(seen.size(), 6u);
  EXPECT_EQ(colorize_labels(r.labels, pal), img);
}

TEST(Ingest, UnknownColour) {
  const auto pal = Palette::default_palette();
  RgbImage img(4, 3);
  const auto grass = *pal.color_of(ClassLabel::grass);
  for (int i = 0; i < 12; ++i) std::copy(grass.begin(), grass.end(), img.data.begin() + 3 * i);
  img.px(2, 1)[0] = 1;
  const auto lax = ingest_label_image(img, pal);
  EXPECT_EQ(lax.unknown_pixels, 1u);
  EXPECT_EQ(lax.labels.at(2, 1), kIgnoreLabel);
  try {
    ingest_label_image(img, pal, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unknown_color);
    EXPECT_NE(std::string(e.what()).find("(2, 1)"), std::string::npos) << e.what();
  }
}

TEST(Split, PaperRatio) {
  const auto s = split_dataset(make_ids(100), 0.8, 1);
  EXPECT_EQ(s.train.size(), 80u);
  EXPECT_EQ(s.test.size(), 20u);
}

TEST(Split, FloorSemantics) {
  const auto s = split_dataset(make_ids(1), 0.8, 1);
  EXPECT_EQ(s.train.size(), 0u);
  EXPECT_EQ(s.test.size(), 1u);
}

TEST(Split, Errors) {
  try {
    split_dataset({}, 0.8, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_dataset);
  }
  EXPECT_THROW(split_dataset(make_ids(3), 1.5, 0), Error);
  EXPECT_THROW(split_dataset(make_ids(3), -0.1, 0), Error);
}

TEST(Split, DisjointCoveringDeterministic) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 60);
    const double ratio = (rng() % 101) / 100.0;
    const std::uint64_t seed = rng();
    const auto ids = make_ids(n);
    const auto a = split_dataset(ids, ratio, seed);
    const auto b = split_dataset(ids, ratio, seed);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    std::set<std::string> all(a.train.begin(), a.train.end());
    for (const auto& t : a.test) EXPECT_TRUE(all.insert(t).second) << "overlap " << t;
    EXPECT_EQ(all, std::set<std::string>(ids.begin(), ids.end()));
    EXPECT_NEAR(double(a.train.size()), ratio * n, 1.0);
  }
}

TEST(Split, SeedChangesOrder) {
  const auto ids = make_ids(50);
  EXPECT_NE(split_dataset(ids, 0.8, 1).train, split_dataset(ids, 0.8, 2).train);
}

TEST(Container, RoundTripAllKinds) {
  std::uint64_t seed = 0;
  for (auto kind : encodings::all_variants()) {
    const auto img = random_mci(kind, 7, 5, ++seed);
    ContainerHeader hdr;
    const auto bytes = serialize_container(img, 0xDEADBEEFCAFEull);
    EXPECT_EQ(bytes.size(), kContainerHeaderSize + 35u * kind.channel_count());
    const auto back = parse_container(bytes, &hdr);
    EXPECT_EQ(back.planes, img.planes);
    EXPECT_EQ(back.kind, img.kind);
    EXPECT_EQ(hdr.rig_hash, 0xDEADBEEFCAFEull);
    EXPECT_EQ(hdr.width, 7u);
  }
}

TEST(Container, HeaderLayout) {
  const auto img = random_mci({Encoding::RGBH, StereoSource::ASW}, 3, 2, 1);
  const auto b = serialize_container(img, 0x0102030405060708ull);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "ORMC");
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[5], 0);
  EXPECT_EQ(b[6], 3);
  EXPECT_EQ(b[10], 2);
  EXPECT_EQ(b[14], 4);
  EXPECT_EQ(b[18], 0x08);
  EXPECT_EQ(b[25], 0x01);
  EXPECT_EQ(b[28], img.planes[0].data[0]);
}

TEST(Container, Truncated) {
  const auto img = random_mci({Encoding::RGB, StereoSource::None}, 4, 4, 3);
  auto b = serialize_container(img, 0);
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{27}, b.size() - 1}) {
    std::vector<std::uint8_t> t(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(cut));
    try {
      parse_container(t);
      FAIL() << cut;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::format);
    }
  }
  b.push_back(0);
  EXPECT_THROW(parse_container(b), Error);
  auto bad_magic = serialize_container(img, 0);
  bad_magic[0] = 'X';
  EXPECT_THROW(parse_container(bad_magic), Error);
}

TEST(Container, KindChannelMismatch) {
  const auto img = random_mci({Encoding::RGBD, StereoSource::SGBM}, 4, 4, 3);
  auto b = serialize_container(img, 0);
  b[15] = static_cast<std::uint8_t>(Encoding::RGBDHA);
  try {
    parse_container(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::consistency);
  }
}

TEST(Container, FileRoundTripAndPngExport) {
  offroad::testing::TempDir tmp;
  const auto img = random_mci({Encoding::RGB, StereoSource::None}, 9, 6, 8);
  write_container(img, tmp / "a.orc", 5);
  EXPECT_EQ(read_container(tmp / "a.orc").planes, img.planes);
  EXPECT_THROW(read_container(tmp / "none.orc"), Error);

  export_png(img, tmp / "a.png");
  const auto rgb = io::read_rgb(tmp / "a.png");
  EXPECT_EQ(rgb.px(4, 3)[1], img.planes[1].at(4, 3));

  const auto six = random_mci({Encoding::RGBDHA, StereoSource::SGBM}, 9, 6, 9);
  export_png(six, tmp / "six.png");
  const auto stacked = io::read_gray(tmp / "six.png");
  EXPECT_EQ(stacked.height, 36);
  EXPECT_EQ(stacked.at(2, 6 * 5 + 1), six.planes[5].at(2, 1));
}

TEST(Manifest, RoundTripRelativePaths) {
  offroad::testing::TempDir tmp;
  std::filesystem::create_directories(tmp / "sub");
  Manifest m;
  m.samples.push_back({"a", tmp / "sub/a.png", tmp / "sub/a_l.png", tmp / "sub/a_r.png"});
  m.samples.push_back({"b", tmp / "sub/b.png", tmp / "sub/b_l.png", std::nullopt});
  m.save(tmp / "m.txt");
  const auto text = offroad::testing::slurp(tmp / "m.txt");
  EXPECT_EQ(text.find(tmp.path().string()), std::string::npos) << text;
  const auto back = Manifest::load(tmp / "m.txt");
  ASSERT_EQ(back.samples.size(), 2u);
  EXPECT_EQ(std::filesystem::weakly_canonical(back.samples[0].right.value()),
            std::filesystem::weakly_canonical(tmp / "sub/a_r.png"));
  EXPECT_FALSE(back.samples[1].right.has_value());
  EXPECT_EQ(back.subset({"b"}).samples.size(), 1u);
  EXPECT_EQ(back.ids(), (std::vector<std::string>{"a", "b"}));
}

TEST(Manifest, Malformed) {
  offroad::testing::TempDir tmp;
  std::ofstream(tmp / "m.txt") << "only_one_field\n";
  EXPECT_THROW(Manifest::load(tmp / "m.txt"), Error);
  std::ofstream(tmp / "d.txt") << "a x.png y.png\na x.png y.png\n";
  EXPECT_THROW(Manifest::load(tmp / "d.txt"), Error);
}
