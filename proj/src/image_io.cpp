#include "offroad/image_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>

namespace offroad::io {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(Errc::io, "cannot open " + path.string());
  return f;
}

// Decoded PNG normalised to 1 (gray) or 3 (rgb) channels of 8 or 16 bits.
struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;
};

Decoded decode(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8))
    throw Error(Errc::format, "not a PNG file: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) throw Error(Errc::io, "libpng initialisation failed");

  Decoded out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::format, "corrupt PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);  // host little-endian rows
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.bytes.resize(stride * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void encode(const std::filesystem::path& path, int width, int height, int color_type, int bit_depth,
            const std::uint8_t* data, std::size_t stride) {
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) throw Error(Errc::io, "libpng initialisation failed");
  std::vector<png_bytep> rows(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::io, "failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(data + stride * y);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

RgbImage read_rgb(const std::filesystem::path& path) {
  Decoded d = decode(path);
  if (d.bit_depth != 8) throw Error(Errc::format, "expected 8-bit PNG: " + path.string());
  RgbImage img(d.width, d.height);
  const std::size_t n = static_cast<std::size_t>(d.width) * d.height;
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) img.data[i * 3 + c] = d.channels == 1 ? d.bytes[i] : d.bytes[i * 3 + c];
  return img;
}

GrayImage read_gray(const std::filesystem::path& path) {
  Decoded d = decode(path);
  if (d.bit_depth != 8) throw Error(Errc::format, "expected 8-bit PNG: " + path.string());
  GrayImage img(d.width, d.height);
  const std::size_t n = img.size();
  for (std::size_t i = 0; i < n; ++i)
    img.data[i] = d.channels == 1 ? d.bytes[i] : luminance(d.bytes[i * 3], d.bytes[i * 3 + 1], d.bytes[i * 3 + 2]);
  return img;
}

Plane<std::uint16_t> read_gray16(const std::filesystem::path& path) {
  Decoded d = decode(path);
  if (d.bit_depth != 16 || d.channels != 1) throw Error(Errc::format, "expected 16-bit gray PNG: " + path.string());
  Plane<std::uint16_t> img(d.width, d.height);
  for (std::size_t i = 0; i < img.size(); ++i)
    img.data[i] = static_cast<std::uint16_t>(d.bytes[2 * i] | (d.bytes[2 * i + 1] << 8));
  return img;
}

void write_rgb(const std::filesystem::path& path, const RgbImage& img) {
  encode(path, img.width, img.height, PNG_COLOR_TYPE_RGB, 8, img.data.data(), static_cast<std::size_t>(img.width) * 3);
}

void write_gray(const std::filesystem::path& path, const GrayImage& img) {
  encode(path, img.width, img.height, PNG_COLOR_TYPE_GRAY, 8, img.data.data(), static_cast<std::size_t>(img.width));
}

void write_gray16(const std::filesystem::path& path, const Plane<std::uint16_t>& img) {
  std::vector<std::uint8_t> bytes(img.size() * 2);
  for (std::size_t i = 0; i < img.size(); ++i) {
    bytes[2 * i] = static_cast<std::uint8_t>(img.data[i] & 0xff);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(img.data[i] >> 8);
  }
  encode(path, img.width, img.height, PNG_COLOR_TYPE_GRAY, 16, bytes.data(), static_cast<std::size_t>(img.width) * 2);
}

}  // namespace offroad::io
