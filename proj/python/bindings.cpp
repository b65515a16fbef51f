#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "offroad/dataset.hpp"
#include "offroad/encodings.hpp"
#include "offroad/geometry.hpp"
#include "offroad/metrics.hpp"
#include "offroad/minisegnet.hpp"
#include "offroad/stereo.hpp"
#include "offroad/synthscene.hpp"

namespace py = pybind11;
using namespace offroad;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

GrayImage gray_from(const U8Array& a, const char* what) {
  if (a.ndim() != 2) throw py::value_error(std::string(what) + " must be a 2-D uint8 array");
  GrayImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(img.data.data(), a.data(), img.data.size());
  return img;
}

RgbImage rgb_from(const U8Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw py::value_error("rgb must be an HxWx3 uint8 array");
  RgbImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(img.data.data(), a.data(), img.data.size());
  return img;
}

U8Array to_array(const Plane<std::uint8_t>& p) {
  U8Array out({p.height, p.width});
  std::memcpy(out.mutable_data(), p.data.data(), p.data.size());
  return out;
}

U8Array to_array(const RgbImage& img) {
  U8Array out({img.height, img.width, 3});
  std::memcpy(out.mutable_data(), img.data.data(), img.data.size());
  return out;
}

// Disparity maps cross the boundary as float arrays with NaN for invalid pixels.
F64Array to_array(const stereo::DisparityMap& dm) {
  F64Array out({dm.height, dm.width});
  double* dst = out.mutable_data();
  for (std::size_t i = 0; i < dm.disparity.size(); ++i)
    dst[i] = dm.valid[i] ? dm.disparity[i] : std::numeric_limits<double>::quiet_NaN();
  return out;
}

stereo::DisparityMap disparity_from(const F64Array& a) {
  if (a.ndim() != 2) throw py::value_error("disparity must be a 2-D float array");
  stereo::DisparityMap dm(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  const double* src = a.data();
  for (std::size_t i = 0; i < dm.disparity.size(); ++i)
    if (std::isfinite(src[i])) {
      dm.disparity[i] = src[i];
      dm.valid[i] = 1;
    }
  return dm;
}

encodings::NormalMap normals_from(const F64Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw py::value_error("normals must be an HxWx3 float array");
  encodings::NormalMap nm(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  const double* src = a.data();
  for (std::size_t i = 0; i < nm.normals.size(); ++i) {
    if (!std::isfinite(src[3 * i])) continue;
    nm.normals[i] = {src[3 * i], src[3 * i + 1], src[3 * i + 2]};
    nm.valid[i] = 1;
  }
  return nm;
}

F64Array to_array(const encodings::NormalMap& nm) {
  F64Array out({nm.height, nm.width, 3});
  double* dst = out.mutable_data();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < nm.normals.size(); ++i) {
    const auto& n = nm.normals[i];
    dst[3 * i] = nm.valid[i] ? n.x : nan;
    dst[3 * i + 1] = nm.valid[i] ? n.y : nan;
    dst[3 * i + 2] = nm.valid[i] ? n.z : nan;
  }
  return out;
}

encodings::EncodingKind kind_from(const std::string& kind, const std::string& source) {
  encodings::EncodingKind k{encodings::parse_encoding(kind), encodings::parse_stereo_source(source)};
  if (k.encoding == encodings::Encoding::RGB) k.source = encodings::StereoSource::None;
  return k;
}

U8Array planes_to_array(const encodings::MultiChannelImage& img) {
  U8Array out({img.channel_count(), img.height, img.width});
  auto* dst = out.mutable_data();
  for (const auto& p : img.planes) {
    std::memcpy(dst, p.data.data(), p.data.size());
    dst += p.data.size();
  }
  return out;
}

encodings::MultiChannelImage array_to_planes(const U8Array& a, encodings::EncodingKind kind) {
  if (a.ndim() != 3) throw py::value_error("planes must be a CxHxW uint8 array");
  const int c = static_cast<int>(a.shape(0)), h = static_cast<int>(a.shape(1)), w = static_cast<int>(a.shape(2));
  encodings::MultiChannelImage img{w, h, kind, {}};
  const auto* src = a.data();
  for (int k = 0; k < c; ++k) {
    Channel8 p(w, h);
    std::memcpy(p.data.data(), src + static_cast<std::size_t>(k) * w * h, p.data.size());
    img.planes.push_back(std::move(p));
  }
  return img;
}

nn::Tensor tensor_from(const F64Array& a) {
  if (a.ndim() != 3) throw py::value_error("tensor must be CxHxW");
  nn::Tensor t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
  std::memcpy(t.data.data(), a.data(), t.data.size() * sizeof(double));
  return t;
}

F64Array to_array(const nn::Tensor& t) {
  F64Array out({t.channels, t.height, t.width});
  std::memcpy(out.mutable_data(), t.data.data(), t.data.size() * sizeof(double));
  return out;
}

LabelMap labels_from(const U8Array& a, const char* what) { return gray_from(a, what); }

metrics::ConfusionMatrix cm_from(const py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2 || a.shape(0) != kNumClasses || a.shape(1) != kNumClasses)
    throw py::value_error("confusion matrix must be 6x6");
  metrics::ConfusionMatrix cm;
  for (int g = 0; g < kNumClasses; ++g)
    for (int p = 0; p < kNumClasses; ++p) cm.counts[g][p] = a.at(g, p);
  return cm;
}

}  // namespace

PYBIND11_MODULE(_offroad, m) {
  m.doc() = "Stereo depth encodings and off-road segmentation tools";

  static py::exception<Error> error_type(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error_type, e.what());
    }
  });

  py::class_<geometry::CameraRig>(m, "CameraRig")
      .def(py::init<>())
      .def_readwrite("focal_length_px", &geometry::CameraRig::focal_length_px)
      .def_readwrite("baseline_m", &geometry::CameraRig::baseline_m)
      .def_readwrite("camera_height_m", &geometry::CameraRig::camera_height_m)
      .def_readwrite("pitch_rad", &geometry::CameraRig::pitch_rad)
      .def_property(
          "principal_point", [](const geometry::CameraRig& r) { return py::make_tuple(r.principal_point.u, r.principal_point.v); },
          [](geometry::CameraRig& r, std::pair<double, double> p) { r.principal_point = {p.first, p.second}; })
      .def_property(
          "image_size", [](const geometry::CameraRig& r) { return py::make_tuple(r.image_size.width, r.image_size.height); },
          [](geometry::CameraRig& r, std::pair<int, int> s) { r.image_size = {s.first, s.second}; })
      .def("validate", &geometry::CameraRig::validate)
      .def("hash", &geometry::CameraRig::hash)
      .def("to_text", &geometry::CameraRig::to_text)
      .def_static("from_text", &geometry::CameraRig::from_text)
      .def_static("load", &geometry::CameraRig::load)
      .def("save", &geometry::CameraRig::save)
      .def("__eq__", [](const geometry::CameraRig& a, const geometry::CameraRig& b) { return a == b; })
      .def("__repr__", [](const geometry::CameraRig& r) { return "CameraRig(\n" + r.to_text() + ")"; });

  m.def("depth_from_disparity", &geometry::depth_from_disparity, py::arg("disparity"), py::arg("rig") = geometry::CameraRig{});
  m.def(
      "reproject_pixel",
      [](double u, double v, double d, const geometry::CameraRig& rig) {
        const auto p = geometry::reproject_pixel(u, v, d, rig);
        return py::make_tuple(p.x, p.y, p.z);
      },
      py::arg("u"), py::arg("v"), py::arg("disparity"), py::arg("rig") = geometry::CameraRig{});
  m.def(
      "point_height",
      [](std::tuple<double, double, double> p, const geometry::CameraRig& rig) {
        return geometry::point_height({std::get<0>(p), std::get<1>(p), std::get<2>(p)}, rig);
      },
      py::arg("point"), py::arg("rig") = geometry::CameraRig{});

  m.def(
      "sgbm",
      [](const U8Array& left, const U8Array& right, int d_min, int d_max, int p1, int p2, int num_paths,
         int uniqueness_ratio, int lr_max_diff) {
        stereo::SgbmParams p;
        p.d_min = d_min;
        p.d_max = d_max;
        p.p1 = p1;
        p.p2 = p2;
        p.num_paths = num_paths;
        p.uniqueness_ratio = uniqueness_ratio;
        p.lr_max_diff = lr_max_diff;
        const auto l = gray_from(left, "left"), r = gray_from(right, "right");
        stereo::DisparityMap dm;
        {
          py::gil_scoped_release release;
          dm = stereo::sgbm_disparity(l, r, p);
        }
        return to_array(dm);
      },
      py::arg("left"), py::arg("right"), py::arg("d_min") = 1, py::arg("d_max") = 64, py::arg("p1") = 8,
      py::arg("p2") = 32, py::arg("num_paths") = 8, py::arg("uniqueness_ratio") = 10, py::arg("lr_max_diff") = 1,
      "Semi-global matching on 8-bit grayscale images. Invalid pixels are NaN.");

  m.def(
      "asw",
      [](const U8Array& left, const U8Array& right, int window_radius, double gamma_color, double gamma_spatial,
         int d_min, int d_max, int lr_max_diff, int uniqueness_ratio, int jobs) {
        stereo::AswParams p;
        p.window_radius = window_radius;
        p.gamma_color = gamma_color;
        p.gamma_spatial = gamma_spatial;
        p.d_min = d_min;
        p.d_max = d_max;
        p.lr_max_diff = lr_max_diff;
        p.uniqueness_ratio = uniqueness_ratio;
        p.jobs = jobs;
        const auto l = gray_from(left, "left"), r = gray_from(right, "right");
        stereo::DisparityMap dm;
        {
          py::gil_scoped_release release;
          dm = stereo::asw_disparity(l, r, p);
        }
        return to_array(dm);
      },
      py::arg("left"), py::arg("right"), py::arg("window_radius") = 16, py::arg("gamma_color") = 14.0,
      py::arg("gamma_spatial") = 17.5, py::arg("d_min") = 1, py::arg("d_max") = 64, py::arg("lr_max_diff") = 1,
      py::arg("uniqueness_ratio") = 5, py::arg("jobs") = 1,
      "Adaptive support-weight matching on 8-bit grayscale images. Invalid pixels are NaN.");

  m.def("encode_disparity", [](const F64Array& d) { return to_array(encodings::encode_disparity(disparity_from(d))); });
  m.def(
      "encode_height",
      [](const F64Array& d, const geometry::CameraRig& rig) {
        return to_array(encodings::encode_height(disparity_from(d), rig));
      },
      py::arg("disparity"), py::arg("rig") = geometry::CameraRig{});
  m.def(
      "normal_map",
      [](const F64Array& d, const geometry::CameraRig& rig) {
        return to_array(encodings::compute_normal_map(disparity_from(d), rig));
      },
      py::arg("disparity"), py::arg("rig") = geometry::CameraRig{});
  m.def("encode_normals", [](const F64Array& n) {
    const auto c = encodings::encode_normals(normals_from(n));
    return py::make_tuple(to_array(c[0]), to_array(c[1]), to_array(c[2]));
  });
  m.def("encode_angle_with_gravity",
        [](const F64Array& n) { return to_array(encodings::encode_angle_with_gravity(normals_from(n))); });
  m.def(
      "encode",
      [](const U8Array& rgb, const F64Array& disparity, const std::string& kind, const std::string& source,
         const geometry::CameraRig& rig) {
        return planes_to_array(encodings::encode_image(rgb_from(rgb), disparity_from(disparity), rig, kind_from(kind, source)));
      },
      py::arg("rgb"), py::arg("disparity"), py::arg("kind"), py::arg("source") = "sgbm",
      py::arg("rig") = geometry::CameraRig{}, "Pack RGB plus depth features into a CxHxW uint8 array.");

  m.def(
      "scene_spec",
      [](const std::string& name, const geometry::CameraRig& rig, std::uint64_t seed, double disparity,
         double noise_sigma) {
        if (name == "fronto") return synth::fronto_plane_scene(disparity, rig, seed, noise_sigma).to_json();
        if (name == "ground") return synth::ground_plane_scene(rig, seed).to_json();
        if (name == "random") return synth::random_offroad_scene(seed, rig).to_json();
        throw py::value_error("scene must be 'fronto', 'ground' or 'random'");
      },
      py::arg("name"), py::arg("rig") = geometry::CameraRig{}, py::arg("seed") = 0, py::arg("disparity") = 16.0,
      py::arg("noise_sigma") = 0.0, "Scene spec JSON for one of the built-in fixtures.");

  m.def(
      "render_scene",
      [](const std::string& spec_json, const geometry::CameraRig& rig) {
        const auto spec = synth::SceneSpec::from_json(spec_json);
        synth::RenderedScene s;
        {
          py::gil_scoped_release release;
          s = synth::render_scene(spec, rig);
        }
        py::dict out;
        out["left"] = to_array(s.left);
        out["right"] = to_array(s.right);
        out["disparity"] = to_array(s.gt.disparity);
        out["labels"] = to_array(s.gt.label);
        U8Array occ({s.gt.label.height, s.gt.label.width});
        std::memcpy(occ.mutable_data(), s.gt.occluded.data(), s.gt.occluded.size());
        out["occluded"] = occ;
        return out;
      },
      py::arg("spec_json"), py::arg("rig") = geometry::CameraRig{});

  m.def(
      "confusion_matrix",
      [](const U8Array& pred, const U8Array& gt) {
        const auto cm = metrics::confusion_matrix(labels_from(pred, "pred"), labels_from(gt, "gt"));
        py::array_t<std::uint64_t> out({kNumClasses, kNumClasses});
        for (int g = 0; g < kNumClasses; ++g)
          for (int p = 0; p < kNumClasses; ++p) out.mutable_at(g, p) = cm.counts[g][p];
        return py::make_tuple(out, cm.ignored);
      },
      py::arg("pred"), py::arg("gt"), "Returns (6x6 counts indexed [truth, predicted], ignored pixel count).");
  m.def("overall_accuracy", [](const py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast>& cm) {
    return metrics::overall_accuracy(cm_from(cm));
  });
  m.def("mean_avg_precision_recall",
        [](const py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast>& cm) {
          const auto pr = metrics::mean_avg_precision_recall(cm_from(cm));
          return py::make_tuple(pr.mean_precision, pr.mean_recall);
        });
  m.def(
      "format_table",
      [](const std::vector<std::tuple<std::string, double, double, double>>& rows) {
        std::vector<metrics::MetricsReport> reports;
        for (const auto& [name, oa, map, mar] : rows) {
          metrics::MetricsReport r;
          r.name = name;
          r.overall_accuracy = oa;
          r.mean_avg_precision = map;
          r.mean_avg_recall = mar;
          reports.push_back(r);
        }
        return metrics::format_table(reports);
      },
      py::arg("rows"), "rows: (name, overall accuracy, mean average precision, mean average recall)");

  m.def("maxpool_with_indices", [](const F64Array& x) {
    const auto [p, idx] = nn::maxpool_with_indices(tensor_from(x));
    py::array_t<std::uint32_t> ind({idx.channels, idx.height, idx.width});
    std::memcpy(ind.mutable_data(), idx.index.data(), idx.index.size() * sizeof(std::uint32_t));
    return py::make_tuple(to_array(p), ind);
  });
  m.def("unpool_with_indices",
        [](const F64Array& pooled, const py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>& index) {
          const auto p = tensor_from(pooled);
          if (index.ndim() != 3 || index.shape(0) != p.channels || index.shape(1) != p.height ||
              index.shape(2) != p.width)
            throw py::value_error("index shape must match pooled shape");
          nn::PoolIndices idx{p.channels, p.height, p.width, 2 * p.height, 2 * p.width, {}};
          idx.index.assign(index.data(), index.data() + index.size());
          return to_array(nn::unpool_with_indices(p, idx));
        });

  m.def("split_dataset", [](const std::vector<std::string>& ids, double ratio, std::uint64_t seed) {
    const auto s = dataset::split_dataset(ids, ratio, seed);
    return py::make_tuple(s.train, s.test);
  }, py::arg("ids"), py::arg("ratio") = 0.8, py::arg("seed") = 0);

  m.def(
      "write_container",
      [](const std::filesystem::path& path, const U8Array& planes, const std::string& kind, const std::string& source,
         std::uint64_t rig_hash) { dataset::write_container(array_to_planes(planes, kind_from(kind, source)), path, rig_hash); },
      py::arg("path"), py::arg("planes"), py::arg("kind"), py::arg("source") = "none", py::arg("rig_hash") = 0);
  m.def("read_container", [](const std::filesystem::path& path) {
    dataset::ContainerHeader hdr;
    const auto img = dataset::read_container(path, &hdr);
    return py::make_tuple(planes_to_array(img), img.kind.label(), hdr.rig_hash);
  });
}
