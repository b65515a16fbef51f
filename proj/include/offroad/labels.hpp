#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "offroad/image.hpp"

namespace offroad {

enum class ClassLabel : std::uint8_t { sky = 0, water = 1, dirt = 2, grass = 3, bush = 4, tree = 5, ignore = 255 };

inline constexpr int kNumClasses = 6;
inline constexpr std::uint8_t kIgnoreLabel = 255;

inline constexpr std::array<std::string_view, kNumClasses> kClassNames{"sky", "water", "dirt", "grass", "bush", "tree"};

inline std::string_view class_name(ClassLabel c) {
  const auto i = static_cast<std::uint8_t>(c);
  return i < kNumClasses ? kClassNames[i] : std::string_view("ignore");
}

inline std::optional<ClassLabel> parse_class(std::string_view name) {
  for (int i = 0; i < kNumClasses; ++i)
    if (kClassNames[i] == name) return static_cast<ClassLabel>(i);
  if (name == "ignore" || name == "unlabeled") return ClassLabel::ignore;
  return std::nullopt;
}

/// Per-pixel class ids (0..5) with 255 for ignored pixels.
using LabelMap = Plane<std::uint8_t>;

}  // namespace offroad
