#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "offroad/error.hpp"

namespace offroad {

/// Dense single-plane image, row-major.
template <typename T>
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Plane() = default;
  Plane(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
    if (w < 0 || h < 0) throw Error(Errc::dimension, "negative image size");
  }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  T& at(int x, int y) { return data[index(x, y)]; }
  const T& at(int x, int y) const { return data[index(x, y)]; }
  std::span<const T> row(int y) const { return {data.data() + index(0, y), static_cast<std::size_t>(width)}; }
  std::span<T> row(int y) { return {data.data() + index(0, y), static_cast<std::size_t>(width)}; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  friend bool operator==(const Plane&, const Plane&) = default;
};

using GrayImage = Plane<std::uint8_t>;
using Channel8 = Plane<std::uint8_t>;

/// Interleaved 8-bit RGB image.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // r,g,b per pixel

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* px(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* px(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// ITU-R BT.601 luma with round-half-up, computed in integer arithmetic.
inline std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

inline GrayImage to_gray(const RgbImage& rgb) {
  GrayImage g(rgb.width, rgb.height);
  for (int y = 0; y < rgb.height; ++y)
    for (int x = 0; x < rgb.width; ++x) {
      const auto* p = rgb.px(x, y);
      g.at(x, y) = luminance(p[0], p[1], p[2]);
    }
  return g;
}

/// Splits an interleaved RGB image into R, G, B planes.
inline std::vector<Channel8> split_planes(const RgbImage& rgb) {
  std::vector<Channel8> planes(3, Channel8(rgb.width, rgb.height));
  const std::size_t n = static_cast<std::size_t>(rgb.width) * rgb.height;
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) planes[c].data[i] = rgb.data[i * 3 + c];
  return planes;
}

inline RgbImage gray_to_rgb(const GrayImage& g) {
  RgbImage rgb(g.width, g.height);
  for (std::size_t i = 0; i < g.data.size(); ++i) rgb.data[i * 3] = rgb.data[i * 3 + 1] = rgb.data[i * 3 + 2] = g.data[i];
  return rgb;
}

template <typename A, typename B>
void require_same_size(const A& a, const B& b, const char* what) {
  if (a.width != b.width || a.height != b.height)
    throw Error(Errc::dimension, std::string(what) + ": " + std::to_string(a.width) + "x" +
                                     std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                     std::to_string(b.height));
}

}  // namespace offroad
