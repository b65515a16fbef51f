#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "offroad/encodings.hpp"
#include "offroad/labels.hpp"

namespace offroad::dataset {

using Rgb = std::array<std::uint8_t, 3>;

/// Colour -> class lookup loaded from `R,G,B,class_name` lines.
class Palette {
 public:
  void add(Rgb color, ClassLabel label);
  std::optional<ClassLabel> lookup(Rgb color) const;
  std::size_t size() const { return table_.size(); }

  static Palette parse(const std::string& text);
  static Palette load(const std::filesystem::path& path);
  /// One distinct colour per class.
  static Palette default_palette();
  std::optional<Rgb> color_of(ClassLabel label) const;

 private:
  std::map<std::uint32_t, ClassLabel> table_;
};

struct IngestResult {
  LabelMap labels;
  std::size_t unknown_pixels = 0;
};

/// Exact colour lookup per pixel. Unknown colours become the ignore label
/// unless `strict`, which throws Error(Errc::unknown_color) naming the pixel.
IngestResult ingest_label_image(const RgbImage& img, const Palette& palette, bool strict = false);

/// Renders a label map back to palette colours (ignore -> black).
RgbImage colorize_labels(const LabelMap& labels, const Palette& palette);

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

/// Seeded Fisher-Yates shuffle; the first floor(ratio * n) ids go to train.
Split split_dataset(const std::vector<std::string>& ids, double ratio, std::uint64_t seed);

/// One manifest line: `id image label [right]`, paths relative to the
/// manifest's directory unless absolute.
struct Sample {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path label;
  std::optional<std::filesystem::path> right;
};

struct Manifest {
  std::vector<Sample> samples;

  /// Paths are resolved against the manifest's directory.
  static Manifest load(const std::filesystem::path& path);
  /// Paths are written relative to the manifest's directory when possible.
  void save(const std::filesystem::path& path) const;
  std::vector<std::string> ids() const;
  Manifest subset(const std::vector<std::string>& ids) const;
};

// Container: fixed 28-byte little-endian header followed by planar data.
//   0  magic "ORMC"       4  u16 version (1)   6  u32 width   10 u32 height
//   14 u8 channel count   15 u8 encoding tag   16 u8 stereo tag 17 u8 reserved
//   18 u64 rig hash       26 u16 reserved (0)  28 planes, row-major, in order
inline constexpr std::size_t kContainerHeaderSize = 28;
inline constexpr std::uint16_t kContainerVersion = 1;

struct ContainerHeader {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint8_t channels = 0;
  encodings::EncodingKind kind;
  std::uint64_t rig_hash = 0;
};

std::vector<std::uint8_t> serialize_container(const encodings::MultiChannelImage& img, std::uint64_t rig_hash);
/// Throws Errc::format for corrupt/truncated data, Errc::consistency when
/// the channel count disagrees with the encoding kind.
encodings::MultiChannelImage parse_container(const std::vector<std::uint8_t>& bytes, ContainerHeader* header = nullptr);

void write_container(const encodings::MultiChannelImage& img, const std::filesystem::path& path,
                     std::uint64_t rig_hash = 0);
encodings::MultiChannelImage read_container(const std::filesystem::path& path, ContainerHeader* header = nullptr);

/// RGB kinds export as a colour PNG; others as one gray PNG with the planes
/// stacked vertically.
void export_png(const encodings::MultiChannelImage& img, const std::filesystem::path& path);

}  // namespace offroad::dataset
