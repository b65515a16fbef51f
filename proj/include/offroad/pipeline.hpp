#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "offroad/dataset.hpp"
#include "offroad/encodings.hpp"
#include "offroad/geometry.hpp"
#include "offroad/stereo.hpp"

namespace offroad::pipeline {

struct StereoOptions {
  stereo::SgbmParams sgbm;
  stereo::AswParams asw;
};

stereo::DisparityMap compute_disparity(const GrayImage& left, const GrayImage& right, encodings::StereoSource source,
                                       const StereoOptions& options);

/// Reads the pair, matches it (unless kind is RGB) and packs the encoding.
encodings::MultiChannelImage encode_pair(const std::filesystem::path& left, const std::filesystem::path& right,
                                         const geometry::CameraRig& rig, encodings::EncodingKind kind,
                                         const StereoOptions& options);

/// Gray PNGs hold class ids directly; with a palette, colour PNGs are ingested.
LabelMap load_labels(const std::filesystem::path& path, const dataset::Palette* palette = nullptr);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Items must write
/// disjoint outputs; the first exception is rethrown after all workers stop.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace offroad::pipeline
