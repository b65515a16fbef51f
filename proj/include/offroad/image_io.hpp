#pragma once

#include <filesystem>

#include "offroad/image.hpp"

namespace offroad::io {

// PNG reading accepts 8-bit gray, gray+alpha, RGB and RGBA inputs; alpha is dropped.
RgbImage read_rgb(const std::filesystem::path& path);
GrayImage read_gray(const std::filesystem::path& path);
Plane<std::uint16_t> read_gray16(const std::filesystem::path& path);

void write_rgb(const std::filesystem::path& path, const RgbImage& img);
void write_gray(const std::filesystem::path& path, const GrayImage& img);
void write_gray16(const std::filesystem::path& path, const Plane<std::uint16_t>& img);

}  // namespace offroad::io
