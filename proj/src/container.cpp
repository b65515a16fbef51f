#include <fstream>
#include <iterator>

#include "offroad/dataset.hpp"
#include "offroad/image_io.hpp"

namespace offroad::dataset {
namespace {

constexpr char kMagic[4] = {'O', 'R', 'M', 'C'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_container(const encodings::MultiChannelImage& img, std::uint64_t rig_hash) {
  if (img.channel_count() != img.kind.channel_count())
    throw Error(Errc::consistency, "image has " + std::to_string(img.channel_count()) + " planes but kind " +
                                       img.kind.label() + " needs " + std::to_string(img.kind.channel_count()));
  for (const auto& p : img.planes)
    if (p.width != img.width || p.height != img.height) throw Error(Errc::dimension, "plane size mismatch");
  std::vector<std::uint8_t> out;
  const std::size_t plane_size = static_cast<std::size_t>(img.width) * img.height;
  out.reserve(kContainerHeaderSize + plane_size * img.planes.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le<std::uint16_t>(out, kContainerVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(img.width));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(img.height));
  out.push_back(static_cast<std::uint8_t>(img.channel_count()));
  out.push_back(static_cast<std::uint8_t>(img.kind.encoding));
  out.push_back(static_cast<std::uint8_t>(img.kind.source));
  out.push_back(0);
  put_le<std::uint64_t>(out, rig_hash);
  put_le<std::uint16_t>(out, 0);
  for (const auto& p : img.planes) out.insert(out.end(), p.data.begin(), p.data.end());
  return out;
}

encodings::MultiChannelImage parse_container(const std::vector<std::uint8_t>& bytes, ContainerHeader* header) {
  if (bytes.size() < kContainerHeaderSize) throw Error(Errc::format, "container truncated in header");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) throw Error(Errc::format, "bad container magic");
  const std::uint8_t* p = bytes.data();
  if (get_le<std::uint16_t>(p + 4) != kContainerVersion) throw Error(Errc::format, "unsupported container version");
  ContainerHeader h;
  h.width = get_le<std::uint32_t>(p + 6);
  h.height = get_le<std::uint32_t>(p + 10);
  h.channels = p[14];
  if (p[15] > static_cast<std::uint8_t>(encodings::Encoding::RGBDHA)) throw Error(Errc::format, "bad encoding tag");
  if (p[16] > static_cast<std::uint8_t>(encodings::StereoSource::ASW)) throw Error(Errc::format, "bad stereo tag");
  h.kind = {static_cast<encodings::Encoding>(p[15]), static_cast<encodings::StereoSource>(p[16])};
  h.rig_hash = get_le<std::uint64_t>(p + 18);
  if (h.width > 1u << 16 || h.height > 1u << 16) throw Error(Errc::format, "implausible container dimensions");

  const std::size_t plane_size = static_cast<std::size_t>(h.width) * h.height;
  const std::size_t expected = kContainerHeaderSize + plane_size * h.channels;
  if (bytes.size() < expected) throw Error(Errc::format, "container truncated in plane data");
  if (bytes.size() > expected) throw Error(Errc::format, "trailing bytes after container planes");
  if (h.channels != h.kind.channel_count())
    throw Error(Errc::consistency, "header kind " + h.kind.label() + " with " + std::to_string(h.channels) + " planes");

  encodings::MultiChannelImage img{static_cast<int>(h.width), static_cast<int>(h.height), h.kind, {}};
  for (int c = 0; c < h.channels; ++c) {
    Channel8 plane(img.width, img.height);
    const auto* src = p + kContainerHeaderSize + plane_size * c;
    std::copy(src, src + plane_size, plane.data.begin());
    img.planes.push_back(std::move(plane));
  }
  if (header) *header = h;
  return img;
}

void write_container(const encodings::MultiChannelImage& img, const std::filesystem::path& path,
                     std::uint64_t rig_hash) {
  const auto bytes = serialize_container(img, rig_hash);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write container " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, "short write to " + path.string());
}

encodings::MultiChannelImage read_container(const std::filesystem::path& path, ContainerHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read container " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_container(bytes, header);
}

void export_png(const encodings::MultiChannelImage& img, const std::filesystem::path& path) {
  if (img.kind.encoding == encodings::Encoding::RGB) {
    RgbImage rgb(img.width, img.height);
    for (std::size_t i = 0; i < rgb.data.size() / 3; ++i)
      for (int c = 0; c < 3; ++c) rgb.data[i * 3 + c] = img.planes[c].data[i];
    io::write_rgb(path, rgb);
    return;
  }
  GrayImage stacked(img.width, img.height * img.channel_count());
  const std::size_t plane_size = static_cast<std::size_t>(img.width) * img.height;
  for (int c = 0; c < img.channel_count(); ++c)
    std::copy(img.planes[c].data.begin(), img.planes[c].data.end(), stacked.data.begin() + plane_size * c);
  io::write_gray(path, stacked);
}

}  // namespace offroad::dataset
