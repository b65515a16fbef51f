#include "offroad/pipeline.hpp"

#include "offroad/image_io.hpp"

namespace offroad::pipeline {

stereo::DisparityMap compute_disparity(const GrayImage& left, const GrayImage& right, encodings::StereoSource source,
                                       const StereoOptions& options) {
  switch (source) {
    case encodings::StereoSource::SGBM: return stereo::sgbm_disparity(left, right, options.sgbm);
    case encodings::StereoSource::ASW: return stereo::asw_disparity(left, right, options.asw);
    case encodings::StereoSource::None: break;
  }
  throw Error(Errc::config, "no stereo source selected");
}

encodings::MultiChannelImage encode_pair(const std::filesystem::path& left, const std::filesystem::path& right,
                                         const geometry::CameraRig& rig, encodings::EncodingKind kind,
                                         const StereoOptions& options) {
  const RgbImage rgb = io::read_rgb(left);
  if (rgb.width != rig.image_size.width || rgb.height != rig.image_size.height)
    throw Error(Errc::dimension, left.string() + " is " + std::to_string(rgb.width) + "x" + std::to_string(rgb.height) +
                                     " but the rig expects " + std::to_string(rig.image_size.width) + "x" +
                                     std::to_string(rig.image_size.height));
  stereo::DisparityMap dmap;
  if (kind.encoding != encodings::Encoding::RGB) {
    const GrayImage r = io::read_gray(right);
    dmap = compute_disparity(to_gray(rgb), r, kind.source, options);
  }
  return encodings::encode_image(rgb, dmap, rig, kind);
}

LabelMap load_labels(const std::filesystem::path& path, const dataset::Palette* palette) {
  if (palette) return dataset::ingest_label_image(io::read_rgb(path), *palette).labels;
  return io::read_gray(path);
}

}  // namespace offroad::pipeline
